"""Domain types for the atom-cavity Lambda system."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..utils.error_handler import NonUniformGridError

TWO_PI = 2.0 * math.pi
MHZ = 1e6


class LambdaSystemParams(BaseModel):
    """Atom-cavity constants. Rates are angular frequencies in rad/s."""

    g0: float = Field(default=TWO_PI * 12 * MHZ, gt=0, description="Atom-cavity coupling")
    kappa: float = Field(default=TWO_PI * 12 * MHZ, gt=0, description="Cavity field decay")
    gamma: float = Field(default=TWO_PI * 3 * MHZ, ge=0, description="Atomic polarization decay")
    delta_c: float = Field(default=0.0, description="Cavity detuning")
    delta_l: float = Field(default=0.0, description="Drive-laser detuning")
    cavity_length: float = Field(default=74e-6, gt=0, description="Mirror separation (m)")
    finesse: float = Field(default=85_000.0, gt=0, description="Cavity finesse")
    mirror_T1: float = Field(default=40e-6, ge=0, description="Output mirror transmission")
    mirror_T2: float = Field(default=1e-6, ge=0, description="Back mirror transmission")
    mirror_loss_per_mirror: float = Field(default=18e-6, ge=0, description="Loss per mirror")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_mirror_asymmetry(self) -> "LambdaSystemParams":
        if self.mirror_T2 >= self.mirror_T1:
            raise ValueError("mirror_T2 must be smaller than mirror_T1 (one-sided cavity)")
        return self

    @classmethod
    def from_mhz(
        cls, g0: float, kappa: float, gamma: float, **kwargs: float
    ) -> "LambdaSystemParams":
        """Build from rates quoted as ν in MHz (rate = 2π·ν)."""
        return cls(
            g0=TWO_PI * g0 * MHZ, kappa=TWO_PI * kappa * MHZ, gamma=TWO_PI * gamma * MHZ, **kwargs
        )

    @property
    def strong_coupling(self) -> bool:
        return self.g0 > self.kappa and self.g0 > self.gamma

    @property
    def cooperativity(self) -> float:
        """C = g0^2 / (2 kappa gamma); infinite for a lossless atom."""
        if self.gamma == 0:
            return math.inf
        return self.g0**2 / (2.0 * self.kappa * self.gamma)

    @property
    def resonant(self) -> bool:
        return self.delta_c == 0.0 and self.delta_l == 0.0

    def with_coupling(self, g0: float) -> "LambdaSystemParams":
        return self.model_copy(update={"g0": g0})


class EnvelopeKind(str, Enum):
    """What a sampled envelope represents."""

    RABI_DRIVE = "rabi_drive"
    TARGET_PHOTON_AMPLITUDE = "target_photon_amplitude"
    REPUMP = "repump"


@dataclass(frozen=True)
class PulseEnvelope:
    """Uniformly sampled time series for Ω(t) or a photon amplitude."""

    t: np.ndarray
    values: np.ndarray
    kind: EnvelopeKind

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        values = np.asarray(self.values)
        if t.ndim != 1 or t.size < 2:
            raise NonUniformGridError("envelope needs at least two samples on a 1-D grid")
        if values.shape != t.shape:
            raise NonUniformGridError(f"values shape {values.shape} does not match grid {t.shape}")
        steps = np.diff(t)
        dt = steps[0]
        if dt <= 0 or not np.allclose(steps, dt, rtol=1e-6, atol=0.0):
            raise NonUniformGridError("envelope grid must be uniform with positive spacing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", values)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def __len__(self) -> int:
        return int(self.t.size)

    def with_values(self, values: np.ndarray, kind: Optional[EnvelopeKind] = None) -> "PulseEnvelope":
        return PulseEnvelope(t=self.t, values=values, kind=kind or self.kind)

    def resample(self, dt: float) -> "PulseEnvelope":
        """Linear interpolation onto a grid with spacing ``dt`` covering the same window."""
        n = max(int(round(self.duration / dt)), 1) + 1
        t = np.linspace(self.t[0], self.t[-1], n)
        if np.iscomplexobj(self.values):
            values = np.interp(t, self.t, self.values.real) + 1j * np.interp(t, self.t, self.values.imag)
        else:
            values = np.interp(t, self.t, self.values)
        return PulseEnvelope(t=t, values=values, kind=self.kind)

    def to_records(self) -> Dict[str, np.ndarray]:
        """Tabular form (time, value) for the CLI writers."""
        if np.iscomplexobj(self.values):
            return {"t_s": self.t, "re": self.values.real, "im": self.values.imag}
        return {"t_s": self.t, "value": self.values}


@dataclass(frozen=True)
class QuantumState:
    """Single-excitation state: amplitudes of |e,0>, |x,0>, |g,1> plus leaked probability."""

    c_e: complex
    c_x: complex
    c_g: complex
    t: float
    emitted_norm: float = 0.0
    spont_norm: float = 0.0

    @property
    def total_probability(self) -> float:
        return (
            abs(self.c_e) ** 2
            + abs(self.c_x) ** 2
            + abs(self.c_g) ** 2
            + self.emitted_norm
            + self.spont_norm
        )

    @classmethod
    def initial(cls, t: float = 0.0) -> "QuantumState":
        return cls(c_e=1.0 + 0j, c_x=0j, c_g=0j, t=t)


@dataclass(frozen=True)
class StateHistory:
    """Full time series of QuantumState, stored column-wise."""

    t: np.ndarray
    c_e: np.ndarray
    c_x: np.ndarray
    c_g: np.ndarray
    emitted_norm: np.ndarray
    spont_norm: np.ndarray
    kappa: float

    def __len__(self) -> int:
        return int(self.t.size)

    def __getitem__(self, i: int) -> QuantumState:
        return QuantumState(
            c_e=complex(self.c_e[i]),
            c_x=complex(self.c_x[i]),
            c_g=complex(self.c_g[i]),
            t=float(self.t[i]),
            emitted_norm=float(self.emitted_norm[i]),
            spont_norm=float(self.spont_norm[i]),
        )

    @property
    def final(self) -> QuantumState:
        return self[len(self) - 1]

    @property
    def photon_amplitude(self) -> np.ndarray:
        """φ(t) = sqrt(2κ)·c_g(t), units of 1/sqrt(s)."""
        return np.sqrt(2.0 * self.kappa) * self.c_g

    @property
    def photon_intensity(self) -> np.ndarray:
        return np.abs(self.photon_amplitude) ** 2

    @property
    def emission_probability(self) -> float:
        return float(self.emitted_norm[-1])

    @property
    def spontaneous_probability(self) -> float:
        return float(self.spont_norm[-1])

    @property
    def total_probability(self) -> np.ndarray:
        return (
            np.abs(self.c_e) ** 2
            + np.abs(self.c_x) ** 2
            + np.abs(self.c_g) ** 2
            + self.emitted_norm
            + self.spont_norm
        )

    def to_records(self) -> Dict[str, np.ndarray]:
        return {
            "t_s": self.t,
            "pop_e": np.abs(self.c_e) ** 2,
            "pop_x": np.abs(self.c_x) ** 2,
            "pop_g": np.abs(self.c_g) ** 2,
            "emitted": self.emitted_norm,
            "spontaneous": self.spont_norm,
            "photon_intensity": self.photon_intensity,
        }


class OutcomeKind(str, Enum):
    """Result of one driving pulse."""

    CAVITY_PHOTON = "cavity_photon"
    SPONTANEOUS_LOSS = "spontaneous_loss"
    NO_EVENT = "no_event"


# integer codes used in vectorized sampling
OUTCOME_CODES = {OutcomeKind.NO_EVENT: 0, OutcomeKind.CAVITY_PHOTON: 1, OutcomeKind.SPONTANEOUS_LOSS: 2}


@dataclass(frozen=True)
class EmissionOutcome:
    """One quantum trajectory through a pulse."""

    outcome: OutcomeKind
    t_emit: Optional[float]
    t: np.ndarray = field(repr=False)
    photon_amplitude: np.ndarray = field(repr=False)

    @property
    def emitted(self) -> bool:
        return self.outcome is OutcomeKind.CAVITY_PHOTON
