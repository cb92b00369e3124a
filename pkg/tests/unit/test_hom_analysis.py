"""Unit tests for the two-photon visibility analysis."""

import math

import numpy as np
import pytest

from cavity_photon_source.analysis.hom import (
    calibrate_dephasing,
    coherence_time_for,
    expected_visibility,
    hom_visibility,
)
from cavity_photon_source.analysis.models import CorrelationHistogram
from cavity_photon_source.utils.error_handler import InsufficientStatisticsError

pytestmark = pytest.mark.unit

PERIOD = 1e-6
BIN = 20e-9


def histogram(counts_of_tau, max_tau: float = 3e-6, bin_width: float = BIN) -> CorrelationHistogram:
    n_half = int(round(max_tau / bin_width))
    edges = (np.arange(-n_half, n_half + 2) - 0.5) * bin_width
    centers = 0.5 * (edges[:-1] + edges[1:])
    counts = np.asarray(counts_of_tau(centers), dtype=float)
    return CorrelationHistogram(edges, counts, np.zeros_like(counts))


def flat(tau):
    return np.full(tau.shape, 100.0)


def dip(depth: float, coherence_time: float):
    return lambda tau: 100.0 * (1.0 - depth * np.exp(-((tau / coherence_time) ** 2)))


@pytest.fixture
def sin2():
    t = np.linspace(0.0, 350e-9, 701)
    return t, np.sin(np.pi * t / 350e-9) ** 2


class TestHomVisibility:
    """Test V = 1 - A∥/A⊥ and the dip fit."""

    def test_distinguishable_photons(self):
        result = hom_visibility(histogram(flat), histogram(flat), PERIOD)
        assert result.visibility == pytest.approx(0.0)
        assert result.area_parallel == result.area_perpendicular > 0

    def test_fully_suppressed_coincidences(self):
        result = hom_visibility(histogram(np.zeros_like), histogram(flat), PERIOD, fit=False)
        assert result.visibility == pytest.approx(1.0)
        assert result.coherence_time is None

    def test_dip_fit_recovers_coherence_time(self):
        result = hom_visibility(histogram(dip(0.9, 300e-9)), histogram(flat), PERIOD)
        assert result.coherence_time == pytest.approx(300e-9, rel=1e-2)
        assert result.dip_depth == pytest.approx(0.9, rel=1e-2)
        expected = 0.9 * math.sqrt(math.pi) * 300e-9 * math.erf(0.5e-6 / 300e-9) / 1e-6
        assert result.visibility == pytest.approx(expected, abs=0.02)

    def test_dip_fit_unbiased_at_low_counts(self):
        """A few coincidences per bin must not drag the fitted T upwards."""
        rng = np.random.default_rng(3)
        fitted = []
        for _ in range(100):
            par = histogram(lambda tau: rng.poisson(5.0 * (1.0 - 0.95 * np.exp(-((tau / 300e-9) ** 2)))))
            perp = histogram(lambda tau: rng.poisson(np.full(tau.shape, 5.0)))
            fitted.append(hom_visibility(par, perp, PERIOD).coherence_time)
        assert np.mean(fitted) == pytest.approx(300e-9, rel=0.06)

    def test_dip_fit_reports_uncertainty(self):
        rng = np.random.default_rng(5)
        par = histogram(lambda tau: rng.poisson(50.0 * (1.0 - 0.9 * np.exp(-((tau / 300e-9) ** 2)))))
        perp = histogram(lambda tau: rng.poisson(np.full(tau.shape, 50.0)))
        result = hom_visibility(par, perp, PERIOD)
        assert 0 < result.coherence_time_err < 0.2 * result.coherence_time
        assert abs(result.coherence_time - 300e-9) < 4 * result.coherence_time_err

    def test_only_central_window_counts(self):
        outside = lambda tau: np.where(np.abs(tau) < 0.6e-6, 100.0, 0.0)
        result = hom_visibility(histogram(outside), histogram(flat), PERIOD, fit=False)
        assert result.visibility == pytest.approx(0.0)

    def test_mismatched_binning(self):
        with pytest.raises(ValueError):
            hom_visibility(histogram(flat), histogram(flat, bin_width=10e-9), PERIOD)

    def test_empty_perpendicular(self):
        with pytest.raises(InsufficientStatisticsError):
            hom_visibility(histogram(flat), histogram(np.zeros_like), PERIOD)


class TestDephasingModel:
    """Test the visibility of jittered identical photons."""

    def test_no_jitter_is_perfect(self, sin2):
        assert expected_visibility(*sin2, 0.0) == pytest.approx(1.0)

    def test_visibility_falls_with_jitter(self, sin2):
        values = [expected_visibility(*sin2, s) for s in (0.0, 2e6, 5e6, 2e7)]
        assert values == sorted(values, reverse=True)

    def test_calibration_hits_target(self, sin2):
        sigma = calibrate_dephasing(*sin2, 0.87)
        assert sigma > 0
        assert expected_visibility(*sin2, sigma) == pytest.approx(0.87, abs=1e-4)

    def test_perfect_target_needs_no_jitter(self, sin2):
        assert calibrate_dephasing(*sin2, 1.0) == 0.0

    @pytest.mark.parametrize("target", [0.0, -0.1, 1.5])
    def test_invalid_target(self, sin2, target):
        with pytest.raises(ValueError):
            calibrate_dephasing(*sin2, target)

    def test_coherence_time(self):
        assert coherence_time_for(0.0) == math.inf
        assert coherence_time_for(math.sqrt(2.0) / 300e-9) == pytest.approx(300e-9)
