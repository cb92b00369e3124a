"""Two-photon interference visibility and coherence time."""

import math
from typing import Optional, Tuple

import numpy as np
import structlog
from scipy.optimize import brentq, minimize

from ..utils.error_handler import InsufficientStatisticsError
from .models import CorrelationHistogram, HomResult

logger = structlog.get_logger(__name__)


def _dip(tau: np.ndarray, depth: float, coherence_time: float) -> np.ndarray:
    return 1.0 - depth * np.exp(-((tau / coherence_time) ** 2))


_MIN_RATIO = 1e-12


def _dip_nll(params: np.ndarray, tau: np.ndarray, par: np.ndarray, total: np.ndarray, period: float) -> float:
    # Per bin, par ~ Binomial(par + perp, f / (1 + f)) with f the expected ∥/⊥ ratio.
    depth, scaled_time = params
    f = np.maximum(_dip(tau, depth, scaled_time * period), _MIN_RATIO)
    return float(-np.sum(par * np.log(f) - total * np.log1p(f)))


def _hessian(func, x: np.ndarray, steps: np.ndarray) -> np.ndarray:
    n = x.size
    hess = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.eye(n)[i] * steps[i]
            ej = np.eye(n)[j] * steps[j]
            value = (
                func(x + ei + ej) - func(x + ei - ej) - func(x - ei + ej) + func(x - ei - ej)
            ) / (4.0 * steps[i] * steps[j])
            hess[i, j] = hess[j, i] = value
    return hess


def _fit_dip(
    tau: np.ndarray, parallel: np.ndarray, perpendicular: np.ndarray, period: float, bin_width: float
) -> Tuple[Optional[float], Optional[float], Optional[float]]:
    """
    Maximum-likelihood fit of 1 - c·exp(-τ²/T²) to the ∥/⊥ bin ratio.

    Conditioning every bin on its ∥+⊥ total turns the ratio of two Poisson
    counts into a binomial, which stays unbiased when bins hold a handful
    of coincidences. Returns (T, σ_T, c); σ_T is None when the curvature
    at the optimum is not positive definite.
    """
    total = parallel + perpendicular
    populated = total > 0
    if populated.sum() < 3:
        return None, None, None
    tau, par, total = tau[populated], parallel[populated], total[populated]

    lower = bin_width / period
    objective = lambda x: _dip_nll(x, tau, par, total, period)  # noqa: E731
    starts = [(0.9, 0.25), (0.5, 0.1), (0.99, 0.5)]
    best = None
    for start in starts:
        result = minimize(
            objective, np.asarray(start), method="L-BFGS-B", bounds=[(0.0, 1.0), (lower, 100.0)]
        )
        if best is None or result.fun < best.fun:
            best = result
    depth, scaled_time = (float(v) for v in best.x)
    coherence_time = scaled_time * period

    error: Optional[float] = None
    steps = np.array([1e-4, max(1e-4 * scaled_time, 1e-6)])
    centre = np.array([min(max(depth, steps[0]), 1.0 - steps[0]), max(scaled_time, lower + steps[1])])
    hess = _hessian(objective, centre, steps)
    if np.all(np.isfinite(hess)):
        try:
            cov = np.linalg.inv(hess)
        except np.linalg.LinAlgError:
            cov = None
        if cov is not None and np.isfinite(cov[1, 1]) and cov[1, 1] > 0:
            error = float(np.sqrt(cov[1, 1]) * period)
    return coherence_time, error, depth


def hom_visibility(
    hist_parallel: CorrelationHistogram,
    hist_perpendicular: CorrelationHistogram,
    period: float,
    fit: bool = True,
) -> HomResult:
    """
    V = 1 - area∥ / area⊥ over the central window |τ| < period / 2, with
    dark-count coincidences removed from both areas.

    The coherence time T comes from a maximum-likelihood fit of
    1 - c·exp(-τ²/T²) to the ∥/⊥ bin ratio inside the window.

    Raises:
        ValueError: histograms are binned differently
        InsufficientStatisticsError: no perpendicular coincidences in the window
    """
    if not np.allclose(hist_parallel.bin_edges, hist_perpendicular.bin_edges):
        raise ValueError("parallel and perpendicular histograms must share their binning")
    central = hist_parallel.window(-0.5 * period, 0.5 * period)
    par = np.asarray(hist_parallel.counts, dtype=float)[central]
    perp = np.asarray(hist_perpendicular.counts, dtype=float)[central]
    area_par, area_perp = float(par.sum()), float(perp.sum())
    net_par = area_par - float(hist_parallel.background[central].sum())
    net_perp = area_perp - float(hist_perpendicular.background[central].sum())
    if net_perp <= 0:
        raise InsufficientStatisticsError("perpendicular histogram has no coincidences in the central window")

    ratio = net_par / net_perp
    visibility = 1.0 - ratio
    visibility_err = math.sqrt(max(area_par, 1.0)) / net_perp * math.sqrt(1.0 + abs(ratio))

    coherence_time = coherence_err = depth = None
    if fit:
        coherence_time, coherence_err, depth = _fit_dip(
            hist_parallel.centers[central], par, perp, period, hist_parallel.bin_width
        )

    logger.info(
        "hom_visibility",
        visibility=visibility,
        visibility_err=visibility_err,
        coherence_time=coherence_time,
        area_parallel=area_par,
        area_perpendicular=area_perp,
    )
    return HomResult(
        visibility=visibility,
        visibility_err=visibility_err,
        coherence_time=coherence_time,
        coherence_time_err=coherence_err,
        area_parallel=area_par,
        area_perpendicular=area_perp,
        dip_depth=depth,
    )


def expected_visibility(t: np.ndarray, intensity: np.ndarray, sigma_delta: float) -> float:
    """
    Visibility of identical photons with |ψ(t)|² = ``intensity`` under Gaussian
    frequency jitter of standard deviation ``sigma_delta`` (rad/s).

    The distinguishable coincidence profile is the autocorrelation of the
    intensity; jitter leaves a fraction exp(-σ²τ²/2) of it uncancelled.
    """
    dt = float(t[1] - t[0])
    profile = np.correlate(intensity, intensity, mode="full")
    tau = (np.arange(profile.size) - (intensity.size - 1)) * dt
    total = profile.sum()
    if total <= 0:
        raise ValueError("intensity must not vanish")
    return float(np.sum(profile * np.exp(-0.5 * (sigma_delta * tau) ** 2)) / total)


def calibrate_dephasing(t: np.ndarray, intensity: np.ndarray, target_visibility: float) -> float:
    """σ_Δ (rad/s) at which identical photons reach ``target_visibility``."""
    if not 0.0 < target_visibility <= 1.0:
        raise ValueError(f"target visibility must lie in (0, 1], got {target_visibility}")
    if target_visibility >= 1.0:
        return 0.0
    duration = float(t[-1] - t[0])
    hi = 1.0 / duration
    while expected_visibility(t, intensity, hi) > target_visibility:
        hi *= 2.0
        if hi > 1e6 / duration:
            raise ValueError("target visibility is out of reach of the dephasing model")
    sigma = brentq(lambda s: expected_visibility(t, intensity, s) - target_visibility, 0.0, hi, xtol=1e-6 / duration)
    logger.info("dephasing_calibrated", target_visibility=target_visibility, sigma_delta=sigma)
    return float(sigma)


def coherence_time_for(sigma_delta: float) -> float:
    """T = sqrt(2) / σ_Δ."""
    return math.inf if sigma_delta == 0 else math.sqrt(2.0) / sigma_delta
