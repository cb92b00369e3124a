"""Unit tests for the per-coupling emission table."""

import numpy as np
import pytest

from cavity_photon_source.qsim.emission_table import EmissionTable
from cavity_photon_source.qsim.integrator import evolve_amplitudes
from cavity_photon_source.qsim.models import OUTCOME_CODES, EnvelopeKind, OutcomeKind

pytestmark = pytest.mark.unit

CAVITY = OUTCOME_CODES[OutcomeKind.CAVITY_PHOTON]


class TestEmissionTable:
    """Test the coupling grid built from the designed drive."""

    def test_design_probability_at_full_coupling(self, emission_table):
        """Test an atom at g0 emits with the designed P = 0.66."""
        assert emission_table.emission_probability[-1] == pytest.approx(0.66, abs=5e-3)

    def test_uncoupled_column_is_dark(self, emission_table):
        assert emission_table.emission_probability[0] == 0.0
        assert np.all(emission_table.photon_amplitude[:, 0] == 0)

    def test_emission_grows_with_coupling(self, emission_table):
        assert np.all(np.diff(emission_table.emission_probability) > 0)

    def test_columns_match_single_evolution(self, params, designed_drive, emission_table):
        """Test a table column equals a direct evolution at that coupling."""
        column = 5
        direct = evolve_amplitudes(params, designed_drive, emission_table.couplings[column])
        assert emission_table.emission_probability[column] == pytest.approx(
            direct.emission_probability, abs=1e-12
        )
        assert np.allclose(emission_table.intensity(emission_table.couplings[column]), direct.photon_intensity)

    def test_index_for_rounds_and_clips(self, params, emission_table):
        step = params.g0 / 10
        idx = emission_table.index_for(np.array([0.0, 0.49 * step, 0.51 * step, -3 * step, 2 * params.g0]))
        assert list(idx) == [0, 0, 1, 3, 10]

    def test_sample_fractions(self, params, emission_table):
        """Test sampled cavity-photon fraction at g0 matches P within 3σ."""
        n = 20_000
        codes, t_emit = emission_table.sample(np.full(n, params.g0), np.random.default_rng(2))
        p = emission_table.emission_probability[-1]
        assert abs(np.mean(codes == CAVITY) - p) < 3 * np.sqrt(p * (1 - p) / n)
        emitted = t_emit[codes == CAVITY]
        assert emitted.min() >= 0.0
        assert emitted.max() <= 350e-9 + 1e-12

    def test_sample_mixed_couplings_keeps_order(self, params, emission_table):
        """Test results line up with the pulse order of a mixed coupling series."""
        couplings = np.tile([0.0, params.g0], 500)
        codes, _ = emission_table.sample(couplings, np.random.default_rng(8))
        assert not np.any(codes[0::2] == CAVITY)
        assert np.any(codes[1::2] == CAVITY)

    def test_rejects_target_envelope(self, params, designed_drive):
        target = designed_drive.with_values(np.real(designed_drive.values), EnvelopeKind.TARGET_PHOTON_AMPLITUDE)
        with pytest.raises(ValueError):
            EmissionTable(params, target)

    def test_rejects_single_coupling(self, params, designed_drive):
        with pytest.raises(ValueError):
            EmissionTable(params, designed_drive, n_couplings=1)

    def test_length(self, emission_table):
        assert len(emission_table) == 11
