"""Unit tests for transit post-selection and shape recovery."""

import numpy as np
import pytest

from cavity_photon_source.analysis.models import ShapeHistogram, TransitSelection
from cavity_photon_source.analysis.postselect import (
    drive_phase,
    expected_counts,
    recover_shape,
    select_transits,
    shape_agreement,
)
from cavity_photon_source.photostream.models import PS_PER_S, ClickStream
from cavity_photon_source.utils.error_handler import InsufficientStatisticsError

pytestmark = pytest.mark.unit

DRIVE = 350e-9


def clicks_at(t, pulse_index=None, shot_index=None) -> ClickStream:
    t = np.asarray(t, dtype=float)
    n = t.size
    return ClickStream(
        np.rint(t * PS_PER_S).astype(np.uint64),
        np.zeros(n),
        np.zeros(n) if pulse_index is None else pulse_index,
        np.zeros(n) if shot_index is None else shot_index,
        np.zeros(n),
    ).sorted()


def sin2_clicks(schedule, n: int, seed: int = 0) -> ClickStream:
    """Clicks whose drive-window phase follows sin²(πt/T), spread over the gate."""
    rng = np.random.default_rng(seed)
    phases = np.zeros(0)
    while phases.size < n:
        u = rng.random(2 * n) * DRIVE
        phases = np.concatenate([phases, u[rng.random(u.size) < np.sin(np.pi * u / DRIVE) ** 2]])
    phases = phases[:n]
    pulses = rng.integers(0, schedule.pulses_per_gate, n)
    t = schedule.gate_start + pulses * schedule.period + phases
    return clicks_at(t, pulses)


@pytest.fixture
def model():
    t = np.linspace(0.0, DRIVE, 701)
    return t, np.sin(np.pi * t / DRIVE) ** 2


class TestSelectTransits:
    """Test threshold selection of busy time bins."""

    @pytest.fixture
    def bursty(self):
        busy = 0.010 + np.arange(10) * 2e-6
        quiet = 0.0105 + np.arange(3) * 2e-6
        return clicks_at(np.concatenate([busy, quiet]))

    def test_keeps_bins_above_threshold(self, bursty):
        kept, selection = select_transits(bursty, TransitSelection(bin_width=100e-6, threshold_counts=5))
        assert len(kept) == 10
        assert selection.n_selected == 1
        assert selection.bin_start_times()[0] == pytest.approx(0.010)
        assert list(selection.bin_counts) == [10]

    def test_strictly_greater_than_threshold(self, bursty):
        kept, _ = select_transits(bursty, TransitSelection(bin_width=100e-6, threshold_counts=10))
        assert len(kept) == 0

    def test_threshold_monotone(self, bursty):
        kept = [len(select_transits(bursty, TransitSelection(100e-6, n))[0]) for n in (1, 2, 5, 9, 10)]
        assert kept == sorted(kept, reverse=True)
        assert kept[0] == 13

    def test_empty_stream(self):
        kept, selection = select_transits(ClickStream.empty(), TransitSelection())
        assert len(kept) == 0
        assert selection.n_selected == 0

    def test_invalid_selection(self):
        with pytest.raises(ValueError):
            TransitSelection(threshold_counts=0)


class TestShapeRecovery:
    """Test arrival-time histograms inside the drive window."""

    def test_drive_phase(self, short_schedule):
        t = short_schedule.shot_period * 3 + short_schedule.gate_start + 5e-6 + 120e-9
        stream = clicks_at([t], shot_index=np.array([3]))
        assert drive_phase(stream, short_schedule)[0] == pytest.approx(120e-9, abs=1e-12)

    def test_repump_clicks_excluded(self, short_schedule):
        stream = clicks_at(short_schedule.gate_start + np.array([100e-9, 600e-9]))
        hist = recover_shape(stream, short_schedule, n_bins=35)
        assert hist.total == 1
        assert hist.bin_edges[-1] == pytest.approx(DRIVE)

    def test_bin_width_overrides_bin_count(self, short_schedule):
        hist = recover_shape(ClickStream.empty(), short_schedule, bin_width=10e-9)
        assert hist.counts.size == 35

    def test_sin2_clicks_agree_with_sin2_model(self, short_schedule, model):
        hist = recover_shape(sin2_clicks(short_schedule, 20_000), short_schedule, n_bins=35)
        assert hist.total == 20_000
        _, p_value = shape_agreement(hist, *model)
        assert p_value > 1e-3

    def test_sin2_clicks_reject_flat_model(self, short_schedule, model):
        hist = recover_shape(sin2_clicks(short_schedule, 20_000), short_schedule, n_bins=35)
        t, _ = model
        _, p_value = shape_agreement(hist, t, np.ones_like(t))
        assert p_value < 1e-6

    def test_expected_counts_scaled_to_total(self, model):
        edges = np.linspace(0.0, DRIVE, 11)
        hist = ShapeHistogram(edges, np.full(10, 50))
        expected = expected_counts(hist, *model)
        assert expected.sum() == pytest.approx(500.0)
        assert expected[4] == pytest.approx(expected[5])
        assert expected[0] < expected[4]

    def test_vanishing_model(self, model):
        t, _ = model
        hist = ShapeHistogram(np.linspace(0.0, DRIVE, 11), np.full(10, 50))
        with pytest.raises(ValueError):
            expected_counts(hist, t, np.zeros_like(t))

    def test_too_few_counts(self, model):
        hist = ShapeHistogram(np.linspace(0.0, DRIVE, 11), np.zeros(10, dtype=np.int64))
        hist.counts[5] = 3
        with pytest.raises(InsufficientStatisticsError):
            shape_agreement(hist, *model)
