"""Unit tests for keyed random streams."""

import numpy as np
import pytest

from cavity_photon_source.utils.seeding import keyed_rng, make_rng, seed_sequence

pytestmark = pytest.mark.unit


class TestSeeding:
    def test_int_and_tuple_seeds(self):
        assert make_rng(5).random() == make_rng(5).random()
        assert make_rng((5, 1)).random() == make_rng([5, 1]).random()
        assert make_rng((5, 1)).random() != make_rng((5, 2)).random()

    def test_sequence_passes_through(self):
        seq = np.random.SeedSequence(3)
        assert seed_sequence(seq) is seq

    def test_keyed_streams_independent_of_order(self):
        """Test the stream of shot k does not depend on which shots ran before."""
        forward = [keyed_rng(7, 1, k).random() for k in range(5)]
        backward = [keyed_rng(7, 1, k).random() for k in reversed(range(5))]
        assert forward == backward[::-1]
        assert len(set(forward)) == 5

    def test_stage_keys_separate_streams(self):
        assert keyed_rng(7, 0, 3).random() != keyed_rng(7, 1, 3).random()
        assert keyed_rng((7, 0), 3).random() == keyed_rng((7, 0), 3).random()
