"""Result types of the click-stream analysis."""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class CorrelationHistogram:
    """Coincidences of D1 clicks at t1 and D2 clicks at t2 binned in τ = t1 - t2."""

    bin_edges: np.ndarray
    counts: np.ndarray
    accidental_floor: np.ndarray
    masked_windows: List[Tuple[float, float]] = field(default_factory=list)
    normalization: Literal["raw", "rate-normalized"] = "raw"
    n_d1: int = 0
    n_d2: int = 0
    observation_time: float = 0.0
    dark_background: Optional[np.ndarray] = None

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def normalized(self) -> "CorrelationHistogram":
        """g²(τ): counts divided by the uncorrelated expectation."""
        floor = np.where(self.accidental_floor > 0, self.accidental_floor, np.nan)
        return CorrelationHistogram(
            bin_edges=self.bin_edges,
            counts=self.counts / floor,
            accidental_floor=np.ones_like(self.accidental_floor),
            masked_windows=self.masked_windows,
            normalization="rate-normalized",
            n_d1=self.n_d1,
            n_d2=self.n_d2,
            observation_time=self.observation_time,
            dark_background=None if self.dark_background is None else self.dark_background / floor,
        )

    @property
    def background(self) -> np.ndarray:
        """Expected coincidences involving a dark count; zero when none was modelled."""
        if self.dark_background is None:
            return np.zeros_like(self.accidental_floor, dtype=float)
        return self.dark_background

    def window(self, lo: float, hi: float) -> np.ndarray:
        """Mask of bins whose centers lie in [lo, hi)."""
        c = self.centers
        return (c >= lo) & (c < hi)

    def to_records(self) -> Dict[str, np.ndarray]:
        return {
            "tau_s": self.centers,
            "counts": self.counts,
            "accidental": self.accidental_floor,
            "dark_background": self.background,
        }


@dataclass(frozen=True)
class TransitSelection:
    """Post-selection of time bins holding an atom transit."""

    bin_width: float = 100e-6
    threshold_counts: int = 5
    selected_bins: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    bin_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self) -> None:
        if self.threshold_counts < 1:
            raise ValueError("threshold_counts must be >= 1")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be > 0")

    @property
    def n_selected(self) -> int:
        return int(self.selected_bins.size)

    def bin_start_times(self) -> np.ndarray:
        return self.selected_bins.astype(float) * self.bin_width


@dataclass(frozen=True)
class ShapeHistogram:
    """Click arrival times within the drive window."""

    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def density(self) -> np.ndarray:
        width = np.diff(self.bin_edges)
        total = self.counts.sum()
        return self.counts / (total * width) if total else np.zeros_like(width)

    def to_records(self) -> Dict[str, np.ndarray]:
        return {"t_s": self.centers, "counts": self.counts, "density": self.density()}


@dataclass(frozen=True)
class EmissionFit:
    """Conditional click probabilities after a click and their extrapolation to k = 0."""

    k: np.ndarray
    conditional_probs: np.ndarray
    conditional_errors: np.ndarray
    n_conditioning: int
    gaussian_fit: Tuple[float, float, float]
    p_max_raw: float
    p_max_raw_err: float
    p_max_corrected: float
    p_max_corrected_err: float
    low_confidence: bool = False
    signal_probs: Optional[np.ndarray] = None
    dark_fraction: float = 0.0

    def fitted(self) -> np.ndarray:
        """Fitted Gaussian evaluated at each k."""
        amplitude, centre, width = self.gaussian_fit
        return amplitude * np.exp(-0.5 * ((self.k - centre) / width) ** 2)

    def to_records(self) -> Dict[str, np.ndarray]:
        return {
            "k": self.k,
            "p_click": self.conditional_probs,
            "p_signal": self.conditional_probs if self.signal_probs is None else self.signal_probs,
            "err": self.conditional_errors,
            "fit": self.fitted(),
        }


@dataclass(frozen=True)
class HomResult:
    """Two-photon visibility and fitted coherence time."""

    visibility: float
    visibility_err: float
    coherence_time: Optional[float]
    coherence_time_err: Optional[float]
    area_parallel: float
    area_perpendicular: float
    dip_depth: Optional[float] = None


@dataclass(frozen=True)
class SummaryRecord:
    """One line of the machine-readable statistics summary."""

    statistic: str
    value: float
    uncertainty: Optional[float]
    n_events: int
    unit: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
