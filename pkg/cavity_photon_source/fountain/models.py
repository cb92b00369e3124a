"""Launch, mode and transit types for the atomic fountain."""

import math
from dataclasses import dataclass, field
from typing import Dict, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.constants import g as STANDARD_GRAVITY

RB87_D2_WAVELENGTH = 780.241e-9


class LaunchConfig(BaseModel):
    """Moving-molasses launch of the atom cloud from the MOT below the cavity."""

    delta_f: Optional[float] = Field(
        default=None, ge=0, description="Relative molasses detuning (Hz); None puts the apex at the mode"
    )
    wavelength: float = Field(default=RB87_D2_WAVELENGTH, gt=0, description="Cooling wavelength (m)")
    launch_height: float = Field(default=8e-3, gt=0, description="MOT-to-mode distance (m)")
    cloud_radius_sigma: float = Field(default=0.5e-3, ge=0, description="Gaussian cloud radius (m)")
    temperature: float = Field(default=10e-6, ge=0, description="Cloud temperature (K)")
    atom_flux: float = Field(default=0.05, ge=0, description="Mean cavity-entering atoms per shot")
    atom_number_distribution: Literal["poisson", "fixed"] = "poisson"
    gravity: float = Field(default=STANDARD_GRAVITY, gt=0, description="m/s^2")

    model_config = ConfigDict(frozen=True)

    @property
    def detuning(self) -> float:
        """Δf in use: the configured value or the one that puts the apex at the mode."""
        if self.delta_f is not None:
            return self.delta_f
        return math.sqrt(self.gravity * self.launch_height) / self.wavelength


class ModeGeometry(BaseModel):
    """Gaussian TEM00 cavity mode; x is the cavity axis, z is vertical."""

    waist_w0: float = Field(default=20e-6, gt=0, description="Mode waist (m)")
    wavelength: float = Field(default=RB87_D2_WAVELENGTH, gt=0, description="Mode wavelength (m)")
    mode_axis: Literal["x"] = "x"
    standing_wave: bool = True

    model_config = ConfigDict(frozen=True)

    @property
    def diameter(self) -> float:
        return 2.0 * self.waist_w0

    def envelope(self, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Transverse factor exp(-(y²+z²)/w0²)."""
        return np.exp(-(np.square(y) + np.square(z)) / self.waist_w0**2)

    def coupling(self, g0: float, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        """g at a position; signed when the mode is a standing wave."""
        g = g0 * self.envelope(y, z)
        if self.standing_wave:
            g = g * np.cos(2.0 * np.pi * np.asarray(x) / self.wavelength)
        return g


@dataclass(frozen=True)
class AtomTransit:
    """One pass of one atom through the mode, sampled on the pulse grid.

    Times are relative to the launch of the shot. ``pulse_slot`` is the
    index of the pulse period each sample falls in. The samples cover the
    clip band; ``interaction_duration`` is the time spent inside the e⁻¹
    waist and is zero for passages that never reach it.
    """

    shot_index: int
    atom_index: int
    t: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    vz: np.ndarray = field(repr=False)
    g_of_t: np.ndarray = field(repr=False)
    pulse_slot: np.ndarray = field(repr=False)
    interaction_duration: float = 0.0
    closest_coupling: float = 0.0

    @property
    def t_enter(self) -> float:
        return float(self.t[0])

    @property
    def t_exit(self) -> float:
        return float(self.t[-1])

    @property
    def duration(self) -> float:
        """Transit duration: time inside the waist."""
        return self.interaction_duration

    @property
    def enters_waist(self) -> bool:
        return self.interaction_duration > 0.0

    @property
    def clip_duration(self) -> float:
        """Time between the first and last sample inside the clip band."""
        return self.t_exit - self.t_enter

    @property
    def peak_coupling(self) -> float:
        return float(np.max(np.abs(self.g_of_t)))

    def __len__(self) -> int:
        return int(self.t.size)

    def to_records(self) -> Dict[str, np.ndarray]:
        return {
            "t_s": self.t,
            "x_m": self.x,
            "y_m": self.y,
            "z_m": self.z,
            "g_rad_s": self.g_of_t,
        }
