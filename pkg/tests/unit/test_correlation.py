"""Unit tests for the two-detector cross-correlation."""

import math

import numpy as np
import pytest

from cavity_photon_source.analysis.correlation import (
    central_peak_ratio,
    cross_correlate,
    fit_transit_envelope,
    peak_areas,
    split_detectors,
)
from cavity_photon_source.analysis.models import CorrelationHistogram
from cavity_photon_source.photostream.models import PS_PER_S, ClickStream
from cavity_photon_source.utils.error_handler import InsufficientStatisticsError, UnsortedStreamError

pytestmark = pytest.mark.unit


def stream_from(t, detector, pulse_index=None, shot_index=None, sort=True) -> ClickStream:
    t = np.asarray(t, dtype=float)
    n = t.size
    stream = ClickStream(
        np.rint(t * PS_PER_S).astype(np.uint64),
        np.asarray(detector),
        np.zeros(n) if pulse_index is None else pulse_index,
        np.zeros(n) if shot_index is None else shot_index,
        np.zeros(n),
    )
    return stream.sorted() if sort else stream


def pulsed_single_photons(schedule, n_shots=300, p_click=0.3, seed=0) -> ClickStream:
    """At most one click per pulse, on a random detector, 100 ns into the drive window."""
    rng = np.random.default_rng(seed)
    shots, pulses = np.meshgrid(np.arange(n_shots), np.arange(schedule.pulses_per_gate), indexing="ij")
    shots, pulses = shots.ravel(), pulses.ravel()
    fired = rng.random(shots.size) < p_click
    shots, pulses = shots[fired], pulses[fired]
    t = shots * schedule.shot_period + schedule.gate_start + pulses * schedule.period + 100e-9
    detector = rng.integers(0, 2, t.size)
    return stream_from(t, detector, pulses, shots)


def dark_clicks(schedule, n_shots, rate_hz, seed=1) -> ClickStream:
    """Homogeneous dark counts of ``rate_hz`` on each detector over every gate."""
    rng = np.random.default_rng(seed)
    per_detector = rng.poisson(rate_hz * schedule.gate_duration * n_shots, 2)
    detector = np.repeat([0, 1], per_detector)
    shots = rng.integers(0, n_shots, detector.size)
    t = shots * schedule.shot_period + schedule.gate_start + rng.random(detector.size) * schedule.gate_duration
    return stream_from(t, detector, np.zeros(detector.size), shots)


def synthetic_envelope(sigma: float, period: float = 1e-6, bin_width: float = 100e-9, max_tau: float = 300e-6):
    n_half = int(math.ceil(max_tau / bin_width))
    edges = (np.arange(-n_half, n_half + 2) - 0.5) * bin_width
    counts = np.zeros(edges.size - 1)
    per_period = int(round(period / bin_width))
    for k in range(-(n_half // per_period) + 1, n_half // per_period):
        if k != 0:
            counts[n_half + k * per_period] = 1000.0 * math.exp(-0.5 * (k * period / sigma) ** 2)
    return CorrelationHistogram(bin_edges=edges, counts=counts, accidental_floor=np.zeros_like(counts))


class TestCrossCorrelate:
    """Test the pairwise delay histogram."""

    def test_hand_counted_pairs(self):
        """Test τ = t1 - t2 lands in the bin centred on it."""
        d1 = stream_from([1e-9, 5e-9], [0, 0])
        d2 = stream_from([0.9e-9, 3e-9], [1, 1])
        hist = cross_correlate(d1, d2, bin_width=0.1e-9, max_tau=5e-9, observation_time=1.0)
        expected = {0.1e-9: 1, -2.0e-9: 1, 4.1e-9: 1, 2.0e-9: 1}
        assert int(hist.counts.sum()) == 4
        for tau, count in expected.items():
            idx = int(np.argmin(np.abs(hist.centers - tau)))
            assert hist.counts[idx] == count

    def test_bins_centred_on_zero(self):
        hist = cross_correlate(stream_from([0.0], [0]), stream_from([0.0], [1]), 1e-9, 10e-9, observation_time=1.0)
        assert hist.centers[np.argmax(hist.counts)] == pytest.approx(0.0)
        assert hist.bin_width == pytest.approx(1e-9)

    def test_independent_poisson_streams_are_flat(self):
        """Test uncorrelated streams follow n1·n2·bin/T in every bin."""
        rng = np.random.default_rng(1)
        t_obs = 1.0
        d1 = stream_from(np.sort(rng.random(100_000)) * t_obs, np.zeros(100_000))
        d2 = stream_from(np.sort(rng.random(100_000)) * t_obs, np.ones(100_000))
        hist = cross_correlate(d1, d2, bin_width=1e-6, max_tau=20e-6, observation_time=t_obs)
        assert np.allclose(hist.accidental_floor, 1e10 * 1e-6, rtol=1e-3)
        assert np.all(np.abs(hist.counts - hist.accidental_floor) < 5 * np.sqrt(hist.accidental_floor))
        assert np.mean(hist.normalized().counts) == pytest.approx(1.0, abs=0.01)

    def test_dark_only_background_equals_floor(self):
        rng = np.random.default_rng(2)
        d1 = stream_from(np.sort(rng.random(50_000)), np.zeros(50_000))
        d2 = stream_from(np.sort(rng.random(50_000)), np.ones(50_000))
        hist = cross_correlate(d1, d2, 1e-6, 20e-6, observation_time=1.0, dark_rate_hz=50_000.0)
        assert np.allclose(hist.background, hist.accidental_floor)

    def test_no_dark_rate_no_background(self):
        d1 = stream_from([1e-9], [0])
        d2 = stream_from([0.0], [1])
        hist = cross_correlate(d1, d2, 1e-9, 5e-9, observation_time=1.0)
        assert not hist.background.any()

    def test_repump_clicks_masked(self, short_schedule):
        t = short_schedule.gate_start + np.array([100e-9, 500e-9, 1.1e-6, 1.6e-6])
        hist = cross_correlate(
            stream_from(t, np.zeros(4)),
            stream_from(t + 1e-9, np.ones(4)),
            20e-9,
            5e-6,
            schedule=short_schedule,
        )
        assert hist.n_d1 == 2
        assert hist.n_d2 == 2
        assert np.allclose(hist.masked_windows, [(400e-9, 900e-9)])

    def test_unsorted_rejected(self):
        unsorted = stream_from([2e-9, 1e-9], [0, 0], sort=False)
        with pytest.raises(UnsortedStreamError):
            cross_correlate(unsorted, stream_from([0.0], [1]), 1e-9, 5e-9)

    def test_invalid_binning(self):
        with pytest.raises(ValueError):
            cross_correlate(stream_from([0.0], [0]), stream_from([0.0], [1]), 0.0, 5e-9)

    def test_masks_need_schedule(self):
        with pytest.raises(ValueError):
            cross_correlate(stream_from([0.0], [0]), stream_from([0.0], [1]), 1e-9, 5e-9, masks=[(0.0, 1e-9)])


class TestPulsedSource:
    """Test the single-photon signature of a pulsed stream."""

    @pytest.fixture
    def hist(self, short_schedule):
        d1, d2 = split_detectors(pulsed_single_photons(short_schedule))
        return cross_correlate(d1, d2, 20e-9, 10e-6, schedule=short_schedule)

    def test_missing_central_peak(self, hist, short_schedule):
        """Test the τ = 0 area stays below 5 % of the side peaks."""
        ratio, err = central_peak_ratio(hist, short_schedule.period, n_side=4)
        assert ratio < 0.05
        assert err > 0

    def test_side_peaks_symmetric(self, hist, short_schedule):
        ks, areas, errors = peak_areas(hist, short_schedule.period, n_peaks=4)
        for k in range(1, 5):
            plus, minus = areas[ks == k][0], areas[ks == -k][0]
            assert abs(plus - minus) < 4 * math.hypot(errors[ks == k][0], errors[ks == -k][0])

    def test_dark_counts_subtracted_from_central_peak(self, short_schedule):
        """Test dark coincidences fill the raw τ = 0 peak but not the net one."""
        photons = pulsed_single_photons(short_schedule, n_shots=2000)
        stream = ClickStream.merge([photons, dark_clicks(short_schedule, 2000, 3e4)])
        d1, d2 = split_detectors(stream)
        hist = cross_correlate(d1, d2, 20e-9, 10e-6, schedule=short_schedule, dark_rate_hz=3e4)

        ks, raw, _ = peak_areas(hist, short_schedule.period, n_peaks=2)
        assert raw[ks == 0][0] / raw[ks != 0].mean() > 0.1
        ratio, err = central_peak_ratio(hist, short_schedule.period, n_side=4)
        assert abs(ratio) < 0.05

        _, net, _ = peak_areas(hist, short_schedule.period, n_peaks=2, subtract_background=True)
        assert np.all(net[ks != 0] < raw[ks != 0])

    def test_empty_side_peaks(self):
        hist = synthetic_envelope(60e-6)
        empty = CorrelationHistogram(hist.bin_edges, np.zeros_like(hist.counts), hist.accidental_floor)
        with pytest.raises(InsufficientStatisticsError):
            central_peak_ratio(empty, 1e-6)


class TestTransitEnvelope:
    """Test the side-peak envelope fit."""

    def test_recovers_profile_width(self):
        """Test a 60 us autocorrelation width maps to a 100 us profile FWHM."""
        fwhm, err = fit_transit_envelope(synthetic_envelope(60e-6), 1e-6)
        assert fwhm == pytest.approx(2 * math.sqrt(math.log(2)) * 60e-6, rel=1e-3)
        assert err >= 0

    def test_background_removed_before_fit(self):
        """Test a flat dark background under every peak leaves the width unchanged."""
        hist = synthetic_envelope(60e-6)
        per_peak = np.zeros_like(hist.counts)
        per_peak[hist.counts > 0] = 300.0
        with_dark = CorrelationHistogram(
            hist.bin_edges, hist.counts + per_peak, hist.accidental_floor, dark_background=per_peak
        )
        fwhm, _ = fit_transit_envelope(with_dark, 1e-6)
        assert fwhm == pytest.approx(2 * math.sqrt(math.log(2)) * 60e-6, rel=1e-3)

    def test_too_few_side_peaks(self):
        hist = synthetic_envelope(60e-6)
        counts = np.zeros_like(hist.counts)
        centre = counts.size // 2
        counts[centre + 10] = counts[centre - 10] = 50.0
        sparse = CorrelationHistogram(hist.bin_edges, counts, hist.accidental_floor)
        with pytest.raises(InsufficientStatisticsError):
            fit_transit_envelope(sparse, 1e-6)
