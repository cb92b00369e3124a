"""
Emission probability from click-conditioned pulse statistics.

After a click in pulse n the probability of a click in pulse n + k falls
off as the atom leaves the mode. Fitting a Gaussian in k and reading it at
k = 0 gives the click probability of the conditioning pulse itself; dividing
by the detection chain gives the emission probability inside the cavity.

Dark counts enter twice: as a flat click probability in every pulse and as
conditioning clicks that carry no information about the atom. Both are
known from the dark rate and removed before the fit.
"""

import math
from typing import Optional, Tuple

import numpy as np
import structlog
from scipy.optimize import curve_fit

from ..photostream.models import ClickStream, EfficiencyChain, PulseSchedule
from ..photostream.synthesis import N_DETECTORS
from ..utils.error_handler import ConfigurationError, InsufficientStatisticsError
from .models import EmissionFit
from .postselect import drive_phase

logger = structlog.get_logger(__name__)

MIN_CONDITIONING_EVENTS = 100
MIN_PULSES_AHEAD = 5
_MAX_WIDTH = 1e6
# photon-opened conditioning pulses must exceed the dark-only ones by this many σ
_DARK_SIGNIFICANCE = 3.0


def _gaussian(k: np.ndarray, amplitude: float, width: float) -> np.ndarray:
    return amplitude * np.exp(-0.5 * (k / width) ** 2)


def conditional_click_probabilities(
    stream: ClickStream, k_pulses: int, schedule: PulseSchedule
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """
    P(click in pulse n + k | click in pulse n) for k = 1..k_pulses.

    Only clicks inside drive windows count. A conditioning pulse contributes
    to lag k only when pulse n + k is still inside the gate.

    Returns:
        (k, probabilities, binomial errors, number of conditioning pulses)
    """
    phase = drive_phase(stream, schedule)
    in_drive = (phase >= 0.0) & (phase < schedule.drive_duration)
    n_pulses = schedule.pulses_per_gate
    pulse = stream.pulse_index.astype(np.int64)[in_drive]
    shot = stream.shot_index.astype(np.int64)[in_drive]
    keys = np.unique(shot * n_pulses + pulse)
    pulse_of_key = keys % n_pulses

    ks = np.arange(1, k_pulses + 1)
    probs = np.zeros(ks.size)
    errors = np.zeros(ks.size)
    for i, k in enumerate(ks):
        eligible = pulse_of_key + k < n_pulses
        n = int(eligible.sum())
        if n == 0:
            continue
        hits = int(np.isin(keys[eligible] + k, keys, assume_unique=True).sum())
        p = hits / n
        probs[i] = p
        errors[i] = math.sqrt(max(p * (1.0 - p), 1.0 / n) / n)
    return ks, probs, errors, int(keys.size)


def dark_baseline(
    stream: ClickStream,
    n_conditioning: int,
    chain: EfficiencyChain,
    schedule: PulseSchedule,
    n_shots: Optional[int] = None,
) -> Tuple[float, float, float, float]:
    """
    Dark-count contribution to the conditional click probabilities.

    Args:
        stream: Click stream the probabilities were counted on
        n_conditioning: Conditioning pulses found in it
        chain: Supplies the per-detector dark rate
        schedule: Pulse timing
        n_shots: Shots recorded; defaults to the shots holding a click

    Returns:
        (p_dark, dark_fraction, p_signal, dark_fraction_err): dark click
        probability per drive window, expected share of conditioning pulses
        opened by a dark count alone, photon click probability per pulse and
        the Poisson error of the dark share
    """
    if n_shots is None:
        n_shots = int(np.unique(stream.shot_index).size)
    n_pulses = n_shots * schedule.pulses_per_gate
    p_dark = -math.expm1(-N_DETECTORS * chain.dark_rate_hz * schedule.drive_duration)
    if n_pulses == 0 or n_conditioning == 0 or p_dark == 0.0:
        return p_dark, 0.0, 0.0, 0.0
    # a pulse conditions when a photon or a dark count clicks: c = 1 - (1 - p_dark)(1 - q)
    opened = n_conditioning / n_pulses
    p_signal = min(max(1.0 - (1.0 - opened) / (1.0 - p_dark), 0.0), 1.0)
    dark_only = n_pulses * p_dark * (1.0 - p_signal)
    fraction = min(dark_only / n_conditioning, 1.0)
    return p_dark, fraction, p_signal, math.sqrt(dark_only) / n_conditioning


def fit_emission_probability(
    stream: ClickStream,
    k_pulses: int,
    chain: EfficiencyChain,
    schedule: PulseSchedule,
    min_events: int = MIN_CONDITIONING_EVENTS,
    n_shots: Optional[int] = None,
) -> EmissionFit:
    """
    Extrapolate click-conditioned probabilities to the conditioning pulse.

    With p_d the dark click probability of a pulse, f the share of
    conditioning pulses opened by a dark count and q the photon click
    probability of a pulse, the atom's own profile is

        S(k) = ((p(k) - p_d) / (1 - p_d) - f·q) / (1 - f)

    A Gaussian centred on k = 0 (the profile is symmetric in k) is fitted
    to S by weighted least squares with binomial errors.

    Raises:
        ConfigurationError: fewer than five pulses ahead requested
        InsufficientStatisticsError: no conditioning click, or too few of them
            stand out above the dark counts
    """
    if k_pulses < MIN_PULSES_AHEAD:
        raise ConfigurationError([f"k_pulses must be >= {MIN_PULSES_AHEAD}, got {k_pulses}"])
    ks, probs, errors, n_cond = conditional_click_probabilities(stream, k_pulses, schedule)
    if n_cond == 0:
        raise InsufficientStatisticsError("no conditioning clicks inside drive windows")
    low_confidence = n_cond < min_events

    p_dark, dark_fraction, p_signal, dark_fraction_err = dark_baseline(stream, n_cond, chain, schedule, n_shots)
    if 1.0 - dark_fraction < _DARK_SIGNIFICANCE * dark_fraction_err:
        raise InsufficientStatisticsError(
            f"dark counts explain {dark_fraction:.1%} of {n_cond} conditioning pulses"
        )
    scale = 1.0 / ((1.0 - p_dark) * (1.0 - dark_fraction))
    signal = ((probs - p_dark) / (1.0 - p_dark) - dark_fraction * p_signal) / (1.0 - dark_fraction)
    signal_errors = errors * scale

    p0 = (max(float(signal.max()), 1e-6), float(k_pulses))
    popt, pcov = curve_fit(
        _gaussian,
        ks.astype(float),
        signal,
        p0=p0,
        sigma=signal_errors,
        absolute_sigma=True,
        bounds=([0.0, 0.5], [1.0, _MAX_WIDTH]),
    )
    amplitude, width = float(popt[0]), float(popt[1])
    raw = min(amplitude, 1.0)
    fit_err = float(np.sqrt(pcov[0, 0])) if np.isfinite(pcov[0, 0]) else float("nan")
    raw_err = math.hypot(fit_err, raw * dark_fraction_err / (1.0 - dark_fraction))
    corrected = min(raw / chain.total, 1.0) if chain.total > 0 else float("nan")
    corrected_err = raw_err / chain.total if chain.total > 0 else float("nan")

    logger.info(
        "emission_probability_fitted",
        conditioning_events=n_cond,
        dark_fraction=dark_fraction,
        p_max_raw=raw,
        p_max_corrected=corrected,
        width_pulses=width,
        low_confidence=low_confidence,
    )
    return EmissionFit(
        k=ks,
        conditional_probs=probs,
        conditional_errors=errors,
        n_conditioning=n_cond,
        gaussian_fit=(amplitude, 0.0, width),
        p_max_raw=raw,
        p_max_raw_err=raw_err,
        p_max_corrected=corrected,
        p_max_corrected_err=corrected_err,
        low_confidence=low_confidence,
        signal_probs=signal,
        dark_fraction=dark_fraction,
    )
