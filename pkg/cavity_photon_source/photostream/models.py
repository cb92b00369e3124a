"""Detection chain, timing grid and click-stream types."""

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Iterator, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..utils.error_handler import ScheduleOverlapError, UnsortedStreamError

PS_PER_S = 1e12
# 350 ps FWHM timing resolution
DEFAULT_JITTER_SIGMA = 350e-12 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


class Detector(IntEnum):
    D1 = 0
    D2 = 1


class ClickOrigin(IntEnum):
    PHOTON = 0
    DARK = 1
    REPUMP_BACKGROUND = 2


FLAG_IN_REPUMP_WINDOW = 0x01


class EfficiencyChain(BaseModel):
    """Photon losses between the cavity mode and a registered click, plus detector noise."""

    eta_outcoupling: float = Field(default=0.50, ge=0, le=1)
    eta_collection: float = Field(default=0.65, ge=0, le=1)
    eta_detector: float = Field(default=0.70, ge=0, le=1)
    dark_rate_hz: float = Field(default=1000.0, ge=0, description="Per detector")
    detector_jitter_sigma: float = Field(default=DEFAULT_JITTER_SIGMA, ge=0)
    repump_background_rate_hz: float = Field(
        default=0.0, ge=0, description="Per detector, only inside repump windows"
    )

    model_config = ConfigDict(frozen=True)

    @property
    def total(self) -> float:
        return self.eta_outcoupling * self.eta_collection * self.eta_detector

    def then(self, other: "EfficiencyChain") -> "EfficiencyChain":
        """Chain followed by ``other``'s losses; noise settings stay those of ``self``."""
        return self.model_copy(
            update={
                "eta_outcoupling": self.eta_outcoupling * other.eta_outcoupling,
                "eta_collection": self.eta_collection * other.eta_collection,
                "eta_detector": self.eta_detector * other.eta_detector,
            }
        )

    @classmethod
    def transparent(cls) -> "EfficiencyChain":
        return cls(
            eta_outcoupling=1.0,
            eta_collection=1.0,
            eta_detector=1.0,
            dark_rate_hz=0.0,
            detector_jitter_sigma=0.0,
        )


class InterferometerConfig(BaseModel):
    """Beam-splitter setup in front of the two detectors."""

    kind: Literal["HBT", "HOM"] = "HBT"
    delay_s: float = Field(default=1e-6, ge=0, description="Fiber delay of the early photon (HOM)")
    polarization: Literal["parallel", "perpendicular"] = "parallel"
    coherence_time_T: float = Field(default=300e-9, gt=0)
    dephasing_sigma: Optional[float] = Field(
        default=None, ge=0, description="σ_Δ in rad/s; defaults to sqrt(2)/T"
    )
    bs_reflectivity: float = Field(default=0.5, ge=0, le=1)

    model_config = ConfigDict(frozen=True)

    @property
    def sigma_delta(self) -> float:
        if self.dephasing_sigma is not None:
            return self.dephasing_sigma
        return math.sqrt(2.0) / self.coherence_time_T

    def delay_periods(self, period: float) -> int:
        """Fiber delay in whole pulse periods."""
        n = self.delay_s / period
        k = int(round(n))
        if k < 1 or not math.isclose(n, k, rel_tol=1e-9, abs_tol=1e-9):
            raise ScheduleOverlapError(
                f"HOM delay {self.delay_s:g} s is not a positive integer number of {period:g} s periods"
            )
        return k


@dataclass(frozen=True)
class PulseSchedule:
    """
    Timing grid of one run.

    Each pulse period holds a drive window then a repump window. A shot
    (one fountain launch) lasts ``shot_period``; pulses are only recorded
    inside the measurement gate. Times inside a shot start at the launch.
    """

    period: float = 1e-6
    drive_start: float = 0.0
    drive_duration: float = 350e-9
    repump_start: float = 400e-9
    repump_duration: float = 500e-9
    shot_period: float = 0.1
    gate_start: float = 0.030
    gate_duration: float = 0.020

    def __post_init__(self) -> None:
        violations = []
        if self.period <= 0:
            violations.append("period must be > 0")
        if self.drive_duration <= 0 or self.repump_duration < 0:
            violations.append("drive_duration must be > 0 and repump_duration >= 0")
        if self.drive_start < 0 or self.drive_end > self.repump_start + 1e-15:
            violations.append("drive window must end before the repump window starts")
        if self.repump_end > self.period + 1e-15:
            violations.append("repump window must end inside the pulse period")
        if self.gate_start < 0 or self.gate_duration <= 0:
            violations.append("gate must start at >= 0 and last > 0")
        if self.gate_start + self.gate_duration > self.shot_period + 1e-15:
            violations.append("gate must end inside the shot period")
        for name in ("gate_start", "gate_duration", "shot_period"):
            if self.period > 0 and not _is_multiple(getattr(self, name), self.period):
                violations.append(f"{name} must be an integer number of pulse periods")
        if violations:
            raise ScheduleOverlapError("; ".join(violations))

    @property
    def drive_end(self) -> float:
        return self.drive_start + self.drive_duration

    @property
    def repump_end(self) -> float:
        return self.repump_start + self.repump_duration

    @property
    def repetition_rate(self) -> float:
        return 1.0 / self.period

    @property
    def pulses_per_gate(self) -> int:
        return int(round(self.gate_duration / self.period))

    @property
    def first_gate_slot(self) -> int:
        """Pulse slot (counted from the launch) of the first pulse in the gate."""
        return int(round(self.gate_start / self.period))

    @property
    def duty_cycle(self) -> float:
        return self.drive_duration / self.period

    def gate_slots(self) -> np.ndarray:
        return self.first_gate_slot + np.arange(self.pulses_per_gate, dtype=np.int64)

    def phase(self, t_in_shot: np.ndarray) -> np.ndarray:
        """Time since the start of the enclosing pulse period."""
        return np.mod(np.asarray(t_in_shot, dtype=float), self.period)

    def in_drive_window(self, t_in_shot: np.ndarray) -> np.ndarray:
        phase = self.phase(t_in_shot)
        return (phase >= self.drive_start) & (phase < self.drive_end)

    def in_repump_window(self, t_in_shot: np.ndarray) -> np.ndarray:
        phase = self.phase(t_in_shot)
        return (phase >= self.repump_start) & (phase < self.repump_end)

    def in_gate(self, t_in_shot: np.ndarray) -> np.ndarray:
        t = np.asarray(t_in_shot, dtype=float)
        return (t >= self.gate_start) & (t < self.gate_start + self.gate_duration)

    def pulse_index(self, t_in_shot: np.ndarray) -> np.ndarray:
        """Pulse number counted from the gate start."""
        return np.floor((np.asarray(t_in_shot, dtype=float) - self.gate_start) / self.period).astype(np.int64)

    def slot_start(self, slot: np.ndarray) -> np.ndarray:
        return np.asarray(slot, dtype=float) * self.period + self.drive_start

    def absolute_time(self, shot_index: np.ndarray, t_in_shot: np.ndarray) -> np.ndarray:
        return np.asarray(shot_index, dtype=float) * self.shot_period + np.asarray(t_in_shot, dtype=float)


def _is_multiple(value: float, step: float) -> bool:
    n = value / step
    return math.isclose(n, round(n), rel_tol=0.0, abs_tol=1e-6)


@dataclass(frozen=True)
class PhotonBatch:
    """
    Photons emitted into the cavity mode, before any loss.

    ``t_emit`` is measured from the start of the drive window of pulse
    ``pulse_index`` of shot ``shot_index``. ``shape_index`` selects the
    column of ``shapes`` holding the photon's amplitude on ``shape_t``
    (same time origin); without shapes all photons are taken as identical.
    """

    shot_index: np.ndarray
    pulse_index: np.ndarray
    t_emit: np.ndarray
    atom_index: Optional[np.ndarray] = None
    shape_index: Optional[np.ndarray] = None
    shape_t: Optional[np.ndarray] = field(default=None, repr=False)
    shapes: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "shot_index", np.asarray(self.shot_index, dtype=np.int64))
        object.__setattr__(self, "pulse_index", np.asarray(self.pulse_index, dtype=np.int64))
        object.__setattr__(self, "t_emit", np.asarray(self.t_emit, dtype=float))
        n = self.shot_index.size
        if self.pulse_index.size != n or self.t_emit.size != n:
            raise ValueError("photon batch columns differ in length")

    def __len__(self) -> int:
        return int(self.shot_index.size)

    @classmethod
    def empty(cls) -> "PhotonBatch":
        return cls(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0))

    def select(self, mask: np.ndarray) -> "PhotonBatch":
        return PhotonBatch(
            shot_index=self.shot_index[mask],
            pulse_index=self.pulse_index[mask],
            t_emit=self.t_emit[mask],
            atom_index=None if self.atom_index is None else self.atom_index[mask],
            shape_index=None if self.shape_index is None else self.shape_index[mask],
            shape_t=self.shape_t,
            shapes=self.shapes,
        )

    def amplitude(self, rows: np.ndarray, t: np.ndarray) -> np.ndarray:
        """ψ of photons ``rows`` evaluated at ``t`` (same time origin as t_emit)."""
        if self.shapes is None or self.shape_index is None or self.shape_t is None:
            return np.ones(np.shape(t))
        cols = self.shape_index[rows]
        step = self.shape_t[1] - self.shape_t[0]
        idx = np.rint((np.asarray(t, dtype=float) - self.shape_t[0]) / step).astype(np.int64)
        inside = (idx >= 0) & (idx < self.shape_t.size)
        values = self.shapes[np.clip(idx, 0, self.shape_t.size - 1), cols]
        return np.where(inside, values, 0.0)

    @staticmethod
    def concat(batches: Sequence["PhotonBatch"]) -> "PhotonBatch":
        batches = [b for b in batches if len(b)]
        if not batches:
            return PhotonBatch.empty()
        first = batches[0]

        def join(name: str) -> Optional[np.ndarray]:
            parts = [getattr(b, name) for b in batches]
            return None if any(p is None for p in parts) else np.concatenate(parts)

        return PhotonBatch(
            shot_index=np.concatenate([b.shot_index for b in batches]),
            pulse_index=np.concatenate([b.pulse_index for b in batches]),
            t_emit=np.concatenate([b.t_emit for b in batches]),
            atom_index=join("atom_index"),
            shape_index=join("shape_index"),
            shape_t=first.shape_t,
            shapes=first.shapes,
        )


@dataclass(frozen=True)
class ClickRecord:
    """One detector click."""

    t: float
    detector: Detector
    pulse_index: int
    shot_index: int
    in_repump_window: bool


CLICK_DTYPE = np.dtype(
    [("t_ps", "<u8"), ("detector", "u1"), ("pulse_index", "<u4"), ("shot_index", "<u4"), ("flags", "u1")]
)


@dataclass(frozen=True)
class ClickStream:
    """Columnar click stream; ``origin`` is simulation ground truth and is not serialized."""

    t_ps: np.ndarray
    detector: np.ndarray
    pulse_index: np.ndarray
    shot_index: np.ndarray
    flags: np.ndarray
    origin: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "t_ps", np.asarray(self.t_ps, dtype=np.uint64))
        object.__setattr__(self, "detector", np.asarray(self.detector, dtype=np.uint8))
        object.__setattr__(self, "pulse_index", np.asarray(self.pulse_index, dtype=np.uint32))
        object.__setattr__(self, "shot_index", np.asarray(self.shot_index, dtype=np.uint32))
        object.__setattr__(self, "flags", np.asarray(self.flags, dtype=np.uint8))
        if self.origin is not None:
            object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.uint8))
        n = self.t_ps.size
        for name in ("detector", "pulse_index", "shot_index", "flags"):
            if getattr(self, name).size != n:
                raise ValueError(f"click column {name} has {getattr(self, name).size} rows, expected {n}")

    def __len__(self) -> int:
        return int(self.t_ps.size)

    def __iter__(self) -> Iterator[ClickRecord]:
        for i in range(len(self)):
            yield ClickRecord(
                t=float(self.t_ps[i]) / PS_PER_S,
                detector=Detector(int(self.detector[i])),
                pulse_index=int(self.pulse_index[i]),
                shot_index=int(self.shot_index[i]),
                in_repump_window=bool(self.flags[i] & FLAG_IN_REPUMP_WINDOW),
            )

    @classmethod
    def empty(cls) -> "ClickStream":
        return cls(*(np.zeros(0, dtype=CLICK_DTYPE[name]) for name in CLICK_DTYPE.names))

    @classmethod
    def from_records(cls, records: np.ndarray) -> "ClickStream":
        return cls(*(records[name] for name in CLICK_DTYPE.names))

    def to_records(self) -> np.ndarray:
        out = np.empty(len(self), dtype=CLICK_DTYPE)
        for name in CLICK_DTYPE.names:
            out[name] = getattr(self, name)
        return out

    def columns(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in CLICK_DTYPE.names}

    @property
    def t(self) -> np.ndarray:
        """Absolute click times in seconds."""
        return self.t_ps.astype(np.float64) / PS_PER_S

    @property
    def in_repump_window(self) -> np.ndarray:
        return (self.flags & FLAG_IN_REPUMP_WINDOW).astype(bool)

    @property
    def is_sorted(self) -> bool:
        return bool(np.all(self.t_ps[1:] >= self.t_ps[:-1]))

    def require_sorted(self) -> "ClickStream":
        if not self.is_sorted:
            first = int(np.argmax(self.t_ps[1:] < self.t_ps[:-1]))
            raise UnsortedStreamError(f"click timestamps decrease at row {first + 1}")
        return self

    def filter(self, mask: np.ndarray) -> "ClickStream":
        return ClickStream(
            self.t_ps[mask],
            self.detector[mask],
            self.pulse_index[mask],
            self.shot_index[mask],
            self.flags[mask],
            None if self.origin is None else self.origin[mask],
        )

    def for_detector(self, detector: int) -> "ClickStream":
        return self.filter(self.detector == int(detector))

    def sorted(self) -> "ClickStream":
        order = np.lexsort((self.detector, self.t_ps))
        return self.filter(order)

    @staticmethod
    def merge(streams: Sequence["ClickStream"]) -> "ClickStream":
        """Concatenate and time-sort several streams."""
        streams = [s for s in streams if len(s)]
        if not streams:
            return ClickStream.empty()
        with_origin = all(s.origin is not None for s in streams)
        merged = ClickStream(
            np.concatenate([s.t_ps for s in streams]),
            np.concatenate([s.detector for s in streams]),
            np.concatenate([s.pulse_index for s in streams]),
            np.concatenate([s.shot_index for s in streams]),
            np.concatenate([s.flags for s in streams]),
            np.concatenate([s.origin for s in streams]) if with_origin else None,
        )
        return merged.sorted()
