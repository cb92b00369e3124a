"""Unit tests for the click-conditioned emission-probability fit."""

import numpy as np
import pytest

from cavity_photon_source.analysis.emission_fit import (
    conditional_click_probabilities,
    dark_baseline,
    fit_emission_probability,
)
from cavity_photon_source.photostream.models import PS_PER_S, ClickStream, EfficiencyChain
from cavity_photon_source.utils.error_handler import ConfigurationError, InsufficientStatisticsError

pytestmark = pytest.mark.unit


def pulse_clicks(schedule, shots, pulses, phase: float = 100e-9) -> ClickStream:
    shots = np.asarray(shots)
    pulses = np.asarray(pulses)
    t = shots * schedule.shot_period + schedule.gate_start + pulses * schedule.period + phase
    n = t.size
    return ClickStream(np.rint(t * PS_PER_S).astype(np.uint64), np.zeros(n), pulses, shots, np.zeros(n)).sorted()


def flat_clicks(schedule, n_shots: int, p_click: float, seed: int = 0) -> ClickStream:
    """Every pulse clicks independently with the same probability."""
    rng = np.random.default_rng(seed)
    shots, pulses = np.meshgrid(np.arange(n_shots), np.arange(schedule.pulses_per_gate), indexing="ij")
    fired = rng.random(shots.shape) < p_click
    return pulse_clicks(schedule, shots[fired], pulses[fired])


def dark_clicks(schedule, n_shots: int, rate_hz: float, seed: int = 1) -> ClickStream:
    """Dark counts of ``rate_hz`` on each of the two detectors over every gate."""
    rng = np.random.default_rng(seed)
    n = rng.poisson(2 * rate_hz * schedule.gate_duration * n_shots)
    shots = rng.integers(0, n_shots, n)
    offset = rng.random(n) * schedule.gate_duration
    t = shots * schedule.shot_period + schedule.gate_start + offset
    pulses = np.floor(offset / schedule.period).astype(np.int64)
    return ClickStream(
        np.rint(t * PS_PER_S).astype(np.uint64), rng.integers(0, 2, n), pulses, shots, np.zeros(n)
    ).sorted()


def intermittent_atom(schedule, n_shots: int, p_atom: float, p_click: float, seed: int = 0) -> ClickStream:
    """An atom present for the whole gate in a fraction ``p_atom`` of the shots."""
    rng = np.random.default_rng(seed)
    present = rng.random(n_shots) < p_atom
    shots, pulses = np.meshgrid(np.arange(n_shots), np.arange(schedule.pulses_per_gate), indexing="ij")
    fired = present[:, None] & (rng.random(shots.shape) < p_click)
    return pulse_clicks(schedule, shots[fired], pulses[fired])


class TestConditionalProbabilities:
    """Test P(click at n + k | click at n) counting."""

    def test_hand_counted(self, short_schedule):
        stream = pulse_clicks(short_schedule, [0, 0, 0], [0, 1, 3])
        ks, probs, errors, n_cond = conditional_click_probabilities(stream, 3, short_schedule)
        assert list(ks) == [1, 2, 3]
        assert np.allclose(probs, 1 / 3)
        assert n_cond == 3
        assert np.all(errors > 0)

    def test_lag_past_gate_end_not_eligible(self, short_schedule):
        last = short_schedule.pulses_per_gate - 1
        _, probs, _, n_cond = conditional_click_probabilities(pulse_clicks(short_schedule, [0], [last]), 2, short_schedule)
        assert n_cond == 1
        assert np.all(probs == 0)

    def test_pairs_do_not_cross_shots(self, short_schedule):
        last = short_schedule.pulses_per_gate - 1
        stream = pulse_clicks(short_schedule, [0, 1], [last - 1, 0])
        _, probs, _, _ = conditional_click_probabilities(stream, 2, short_schedule)
        assert np.all(probs == 0)

    def test_repump_clicks_ignored(self, short_schedule):
        stream = pulse_clicks(short_schedule, [0, 0], [0, 1], phase=600e-9)
        *_, n_cond = conditional_click_probabilities(stream, 1, short_schedule)
        assert n_cond == 0


class TestFitEmissionProbability:
    """Test the extrapolation to the conditioning pulse."""

    def test_flat_stream_recovers_click_probability(self, short_schedule):
        """Test a stationary 0.15 click probability maps to 0.66 inside the cavity."""
        chain = EfficiencyChain()
        fit = fit_emission_probability(flat_clicks(short_schedule, 400, 0.15), 10, chain, short_schedule)
        assert fit.p_max_raw == pytest.approx(0.15, abs=0.01)
        assert fit.p_max_corrected == pytest.approx(fit.p_max_raw / chain.total)
        assert fit.p_max_corrected == pytest.approx(0.66, abs=0.05)
        assert not fit.low_confidence
        assert np.all(np.abs(fit.conditional_probs - 0.15) < 4 * fit.conditional_errors)

    def test_dark_counts_removed(self, short_schedule):
        """Test darks neither dilute the conditioning set nor raise the baseline."""
        chain = EfficiencyChain(dark_rate_hz=1e5)
        stream = ClickStream.merge(
            [intermittent_atom(short_schedule, 2000, 0.1, 0.3), dark_clicks(short_schedule, 2000, 1e5)]
        )
        fit = fit_emission_probability(stream, 10, chain, short_schedule)
        assert fit.conditional_probs.mean() < 0.2
        assert fit.dark_fraction > 0.5
        assert fit.p_max_raw == pytest.approx(0.3, abs=0.04)

    def test_dark_baseline_without_darks(self, short_schedule):
        stream = flat_clicks(short_schedule, 10, 0.15)
        p_dark, fraction, _, _ = dark_baseline(stream, 100, EfficiencyChain.transparent(), short_schedule)
        assert p_dark == 0.0
        assert fraction == 0.0

    def test_darks_only_rejected(self, short_schedule):
        chain = EfficiencyChain(dark_rate_hz=1e5)
        with pytest.raises(InsufficientStatisticsError):
            fit_emission_probability(dark_clicks(short_schedule, 200, 1e5), 10, chain, short_schedule)

    def test_records(self, short_schedule):
        fit = fit_emission_probability(flat_clicks(short_schedule, 100, 0.15), 5, EfficiencyChain(), short_schedule)
        records = fit.to_records()
        assert set(records) == {"k", "p_click", "p_signal", "err", "fit"}
        assert records["fit"].size == 5

    def test_few_conditioning_clicks_flagged(self, short_schedule):
        fit = fit_emission_probability(flat_clicks(short_schedule, 2, 0.15), 5, EfficiencyChain(), short_schedule)
        assert fit.n_conditioning < 100
        assert fit.low_confidence

    def test_corrected_capped_at_one(self, short_schedule):
        fit = fit_emission_probability(
            flat_clicks(short_schedule, 100, 0.5), 5, EfficiencyChain(eta_detector=0.1), short_schedule
        )
        assert fit.p_max_corrected == 1.0

    def test_too_few_pulses_ahead(self, short_schedule):
        with pytest.raises(ConfigurationError):
            fit_emission_probability(flat_clicks(short_schedule, 10, 0.15), 4, EfficiencyChain(), short_schedule)

    def test_empty_stream(self, short_schedule):
        with pytest.raises(InsufficientStatisticsError):
            fit_emission_probability(ClickStream.empty(), 10, EfficiencyChain(), short_schedule)
