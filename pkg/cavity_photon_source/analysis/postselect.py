"""Transit post-selection and photon-shape recovery."""

from typing import Optional, Tuple

import numpy as np
import structlog
from scipy.stats import chisquare

from ..photostream.models import PS_PER_S, ClickStream, PulseSchedule
from ..utils.error_handler import InsufficientStatisticsError
from .models import ShapeHistogram, TransitSelection

logger = structlog.get_logger(__name__)

MIN_EXPECTED_PER_BIN = 5.0


def select_transits(stream: ClickStream, selection: TransitSelection) -> Tuple[ClickStream, TransitSelection]:
    """
    Keep clicks in time bins holding more than ``threshold_counts`` clicks.

    Bins are aligned to absolute time zero.

    Returns:
        (filtered stream, selection with the selected bin indices filled in)
    """
    if len(stream) == 0:
        return stream, selection
    bin_ps = np.uint64(int(round(selection.bin_width * PS_PER_S)))
    bins = (stream.t_ps // bin_ps).astype(np.int64)
    unique, counts = np.unique(bins, return_counts=True)
    chosen = counts > selection.threshold_counts
    selected = unique[chosen]
    filtered = stream.filter(np.isin(bins, selected))

    logger.info(
        "transits_selected",
        threshold=selection.threshold_counts,
        bin_width=selection.bin_width,
        bins_selected=int(selected.size),
        clicks_kept=len(filtered),
        clicks_total=len(stream),
    )
    result = TransitSelection(
        bin_width=selection.bin_width,
        threshold_counts=selection.threshold_counts,
        selected_bins=selected,
        bin_counts=counts[chosen],
    )
    return filtered, result


def drive_phase(stream: ClickStream, schedule: PulseSchedule) -> np.ndarray:
    """Click time since the start of the enclosing drive window (s)."""
    shot_ps = stream.shot_index.astype(np.uint64) * np.uint64(int(round(schedule.shot_period * PS_PER_S)))
    t_in_shot_ps = stream.t_ps - shot_ps
    period_ps = np.uint64(int(round(schedule.period * PS_PER_S)))
    return (t_in_shot_ps % period_ps).astype(np.float64) / PS_PER_S - schedule.drive_start


def recover_shape(
    stream: ClickStream,
    schedule: PulseSchedule,
    n_bins: int = 50,
    bin_width: Optional[float] = None,
) -> ShapeHistogram:
    """Histogram of click arrival times within the drive window."""
    if bin_width is not None:
        n_bins = max(int(round(schedule.drive_duration / bin_width)), 1)
    edges = np.linspace(0.0, schedule.drive_duration, n_bins + 1)
    phase = drive_phase(stream, schedule)
    inside = (phase >= 0.0) & (phase < schedule.drive_duration)
    counts, _ = np.histogram(phase[inside], bins=edges)
    return ShapeHistogram(bin_edges=edges, counts=counts.astype(np.int64))


def expected_counts(hist: ShapeHistogram, t: np.ndarray, intensity: np.ndarray) -> np.ndarray:
    """Model intensity integrated over each histogram bin, scaled to the histogram total."""
    fine = np.linspace(hist.bin_edges[0], hist.bin_edges[-1], 20 * hist.counts.size + 1)
    model = np.interp(fine, t - t[0], intensity, left=0.0, right=0.0)
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * (model[1:] + model[:-1]) * np.diff(fine))])
    per_bin = np.diff(np.interp(hist.bin_edges, fine, cumulative))
    total = per_bin.sum()
    if total <= 0:
        raise ValueError("model intensity vanishes over the histogram range")
    return per_bin / total * hist.total


def shape_agreement(
    hist: ShapeHistogram, t: np.ndarray, intensity: np.ndarray
) -> Tuple[float, float]:
    """
    Chi-square test of a recovered histogram against a model intensity.

    Bins expecting fewer than five counts are left out and the model is
    rescaled to the counts of the bins kept.

    Returns:
        (chi2, p_value)
    """
    expected = expected_counts(hist, t, intensity)
    keep = expected >= MIN_EXPECTED_PER_BIN
    observed = hist.counts[keep].astype(float)
    expected = expected[keep]
    if keep.sum() < 2 or observed.sum() == 0:
        raise InsufficientStatisticsError("too few populated bins for a chi-square test")
    expected = expected * observed.sum() / expected.sum()
    result = chisquare(observed, expected)
    return float(result.statistic), float(result.pvalue)
