"""
Cross-correlation of the two detector streams (g²(τ) numerator).

Clicks falling in masked phase windows of the pulse period (by default the
repump windows) are dropped from both streams before pairing. The
uncorrelated floor is computed from singles counts, the mask duty cycle
and the measurement gate, not fitted. The part of it that involves a dark
count is kept separately so that peak areas can be background-subtracted.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.optimize import curve_fit

from ..photostream.models import PS_PER_S, ClickStream, PulseSchedule
from ..utils.error_handler import InsufficientStatisticsError
from .models import CorrelationHistogram

logger = structlog.get_logger(__name__)

_CHUNK = 1 << 16
_PHASE_POINTS = 2000
_SUB_BIN_POINTS = 9

Window = Tuple[float, float]


def _unmasked(stream: ClickStream, masks: Sequence[Window], period: float) -> ClickStream:
    if not masks:
        return stream
    period_ps = np.uint64(int(round(period * PS_PER_S)))
    phase = (stream.t_ps % period_ps).astype(np.float64) / PS_PER_S
    drop = np.zeros(len(stream), dtype=bool)
    for start, stop in masks:
        drop |= (phase >= start) & (phase < stop)
    return stream.filter(~drop)


def _mask_overlap(masks: Sequence[Window], period: float, taus: np.ndarray) -> Tuple[np.ndarray, float]:
    """Fraction of time two clicks τ apart are both unmasked, and the unmasked duty cycle."""
    if not masks:
        return np.ones_like(taus), 1.0
    phase = (np.arange(_PHASE_POINTS) + 0.5) * period / _PHASE_POINTS
    open_ = np.ones(_PHASE_POINTS, dtype=bool)
    for start, stop in masks:
        open_ &= ~((phase >= start) & (phase < stop))
    duty = float(open_.mean())
    shifts = np.rint(np.mod(taus, period) / period * _PHASE_POINTS).astype(np.int64) % _PHASE_POINTS
    unique, inverse = np.unique(shifts, return_inverse=True)
    per_shift = np.array([np.mean(open_ & np.roll(open_, -s)) for s in unique])
    overlap = per_shift[inverse].reshape(taus.shape)
    return overlap, duty


def _pair_counts(t1: np.ndarray, t2: np.ndarray, edges_ps: np.ndarray) -> np.ndarray:
    counts = np.zeros(edges_ps.size - 1, dtype=np.int64)
    if t1.size == 0 or t2.size == 0:
        return counts
    lo_edge, hi_edge = int(edges_ps[0]), int(edges_ps[-1])
    for start in range(0, t1.size, _CHUNK):
        chunk = t1[start : start + _CHUNK]
        # τ = t1 - t2 in [lo_edge, hi_edge)  <=>  t2 in (t1 - hi_edge, t1 - lo_edge]
        lo = np.searchsorted(t2, chunk - hi_edge, side="right")
        hi = np.searchsorted(t2, chunk - lo_edge, side="right")
        n_per = hi - lo
        total = int(n_per.sum())
        if total == 0:
            continue
        owner = np.repeat(np.arange(chunk.size), n_per)
        offset = np.arange(total) - np.repeat(np.cumsum(n_per) - n_per, n_per)
        dtau = chunk[owner] - t2[lo[owner] + offset]
        idx = np.searchsorted(edges_ps, dtau, side="right") - 1
        valid = (idx >= 0) & (idx < counts.size)
        counts += np.bincount(idx[valid], minlength=counts.size)
    return counts


def cross_correlate(
    stream_d1: ClickStream,
    stream_d2: ClickStream,
    bin_width: float,
    max_tau: float,
    masks: Optional[Sequence[Window]] = None,
    schedule: Optional[PulseSchedule] = None,
    observation_time: Optional[float] = None,
    dark_rate_hz: float = 0.0,
) -> CorrelationHistogram:
    """
    Histogram all pairwise delays t1 - t2 within ±max_tau.

    Args:
        stream_d1: Sorted D1 clicks
        stream_d2: Sorted D2 clicks
        bin_width: Bin width (s); bins are centred on multiples of it
        max_tau: Half-range (s)
        masks: Phase windows (start, stop) within the pulse period to drop;
            defaults to the schedule's repump window
        schedule: Pulse timing used for masking and the accidental floor
        observation_time: Total gated time; defaults to the number of shots
            seen times the gate length (or the stream span without a schedule)
        dark_rate_hz: Dark-count rate of each detector; sets the background
            subtracted from peak areas

    Raises:
        UnsortedStreamError: either stream is unsorted
    """
    if bin_width <= 0 or max_tau <= 0:
        raise ValueError("bin_width and max_tau must be > 0")
    stream_d1.require_sorted()
    stream_d2.require_sorted()

    if masks is None:
        masks = [] if schedule is None else [(schedule.repump_start, schedule.repump_end)]
    masks = [(float(a), float(b)) for a, b in masks]
    if masks and schedule is None:
        raise ValueError("phase masks need a pulse schedule")

    period = schedule.period if schedule is not None else 0.0
    d1 = _unmasked(stream_d1, masks, period)
    d2 = _unmasked(stream_d2, masks, period)

    n_half = int(math.ceil(max_tau / bin_width))
    edges = (np.arange(-n_half, n_half + 2) - 0.5) * bin_width
    edges_ps = np.rint(edges * PS_PER_S).astype(np.int64)
    counts = _pair_counts(d1.t_ps.astype(np.int64), d2.t_ps.astype(np.int64), edges_ps)

    if observation_time is None:
        observation_time = _observation_time(d1, d2, schedule)
    centers = 0.5 * (edges[:-1] + edges[1:])
    floor = _accidental_floor(len(d1), len(d2), centers, bin_width, observation_time, masks, schedule)
    background = _dark_background(floor, len(d1), len(d2), dark_rate_hz, observation_time, masks, schedule)

    logger.debug(
        "cross_correlated",
        n_d1=len(d1),
        n_d2=len(d2),
        pairs=int(counts.sum()),
        bins=counts.size,
        observation_time=observation_time,
    )
    return CorrelationHistogram(
        bin_edges=edges,
        counts=counts,
        accidental_floor=floor,
        masked_windows=list(masks),
        n_d1=len(d1),
        n_d2=len(d2),
        observation_time=observation_time,
        dark_background=background,
    )


def _observation_time(d1: ClickStream, d2: ClickStream, schedule: Optional[PulseSchedule]) -> float:
    if schedule is not None:
        shots = np.union1d(d1.shot_index, d2.shot_index)
        return float(shots.size * schedule.gate_duration)
    t = np.concatenate([d1.t, d2.t])
    return float(t.max() - t.min()) if t.size > 1 else 0.0


def _accidental_floor(
    n1: int,
    n2: int,
    centers: np.ndarray,
    bin_width: float,
    observation_time: float,
    masks: Sequence[Window],
    schedule: Optional[PulseSchedule],
) -> np.ndarray:
    if observation_time <= 0 or n1 == 0 or n2 == 0:
        return np.zeros_like(centers)
    sub = (np.arange(_SUB_BIN_POINTS) + 0.5) / _SUB_BIN_POINTS - 0.5
    taus = centers[:, None] + sub[None, :] * bin_width
    if masks and schedule is not None:
        overlap, duty = _mask_overlap(masks, schedule.period, taus)
    else:
        overlap, duty = np.ones_like(taus), 1.0
    window = schedule.gate_duration if schedule is not None else observation_time
    gate_overlap = np.clip(1.0 - np.abs(taus) / window, 0.0, None)
    shape = (overlap * gate_overlap).mean(axis=1)
    return n1 * n2 * bin_width * shape / (observation_time * duty**2)


def _unmasked_duty(masks: Sequence[Window], schedule: Optional[PulseSchedule]) -> float:
    if not masks or schedule is None:
        return 1.0
    return _mask_overlap(masks, schedule.period, np.zeros(1))[1]


def _dark_background(
    floor: np.ndarray,
    n1: int,
    n2: int,
    dark_rate_hz: float,
    observation_time: float,
    masks: Sequence[Window],
    schedule: Optional[PulseSchedule],
) -> np.ndarray:
    """Share of the accidental floor from pairs with at least one dark click."""
    if dark_rate_hz <= 0 or n1 == 0 or n2 == 0:
        return np.zeros_like(floor)
    darks = dark_rate_hz * observation_time * _unmasked_duty(masks, schedule)
    signal1, signal2 = max(n1 - darks, 0.0), max(n2 - darks, 0.0)
    return floor * (1.0 - signal1 * signal2 / (n1 * n2))


def peak_areas(
    hist: CorrelationHistogram,
    period: float,
    n_peaks: Optional[int] = None,
    window: Optional[float] = None,
    subtract_background: bool = False,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Coincidence area of the peak at each multiple of the period.

    With ``subtract_background`` the expected dark-count coincidences are
    removed from each area; errors stay those of the raw counts.

    Returns:
        (k, areas, errors) for k = -n_peaks..n_peaks
    """
    half_range = float(hist.bin_edges[-1])
    if n_peaks is None:
        n_peaks = int((half_range - 0.5 * period) // period)
    window = window or period
    background = hist.background
    ks = np.arange(-n_peaks, n_peaks + 1)
    areas = np.zeros(ks.size)
    errors = np.zeros(ks.size)
    for i, k in enumerate(ks):
        sel = hist.window(k * period - 0.5 * window, k * period + 0.5 * window)
        raw = float(hist.counts[sel].sum())
        errors[i] = math.sqrt(max(raw, 1.0))
        areas[i] = raw - float(background[sel].sum()) if subtract_background else raw
    return ks, areas, errors


def central_peak_ratio(hist: CorrelationHistogram, period: float, n_side: int = 4) -> Tuple[float, float]:
    """
    Area of the τ = 0 peak over the mean of the ``n_side`` nearest side
    peaks, both net of dark-count coincidences.
    """
    half = max(n_side // 2, 1)
    ks, areas, errors = peak_areas(hist, period, n_peaks=half, subtract_background=True)
    side = ks != 0
    mean_side = float(areas[side].mean())
    if mean_side <= 0:
        raise InsufficientStatisticsError("no coincidences in the side peaks")
    central = float(areas[~side][0])
    err_central = float(errors[~side][0])
    err_side = float(np.sqrt(np.sum(errors[side] ** 2)) / side.sum())
    ratio = central / mean_side
    err = math.hypot(err_central / mean_side, central * err_side / mean_side**2)
    return ratio, err


def _gaussian(x: np.ndarray, amplitude: float, sigma: float) -> np.ndarray:
    return amplitude * np.exp(-0.5 * (x / sigma) ** 2)


# a flat envelope runs the width to this multiple of the fitted range
_MAX_ENVELOPE_SPAN = 1e3

# FWHM of a Gaussian emission profile whose autocorrelation has standard deviation s
_FWHM_FROM_AUTOCORRELATION_SIGMA = 2.0 * math.sqrt(math.log(2.0))


def fit_transit_envelope(
    hist: CorrelationHistogram, period: float, n_peaks: Optional[int] = None
) -> Tuple[float, float]:
    """
    Gaussian fit to the side-peak areas net of dark-count coincidences.

    The peak-area envelope is the autocorrelation of the emission profile of
    one transit; for a Gaussian profile its width s maps to the profile FWHM
    as 2·sqrt(ln 2)·s.

    Returns:
        (fwhm, fwhm_err) of the emission profile in seconds
    """
    ks, areas, errors = peak_areas(hist, period, n_peaks=n_peaks, subtract_background=True)
    side = ks != 0
    tau = ks[side] * period
    y, err = areas[side], errors[side]
    if np.count_nonzero(y > 0) < 3:
        raise InsufficientStatisticsError("fewer than three populated side peaks")
    p0 = (float(y.max()), max(0.25 * float(np.abs(tau).max()), 1.5 * period))
    popt, pcov = curve_fit(
        _gaussian,
        tau,
        y,
        p0=p0,
        sigma=err,
        absolute_sigma=True,
        x_scale="jac",
        bounds=([0.0, period], [np.inf, _MAX_ENVELOPE_SPAN * float(np.abs(tau).max())]),
    )
    sigma, sigma_err = float(popt[1]), float(np.sqrt(pcov[1, 1]))
    return _FWHM_FROM_AUTOCORRELATION_SIGMA * sigma, _FWHM_FROM_AUTOCORRELATION_SIGMA * sigma_err


def split_detectors(stream: ClickStream) -> List[ClickStream]:
    """Per-detector streams [D1, D2]."""
    return [stream.for_detector(0), stream.for_detector(1)]
