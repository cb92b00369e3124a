"""Closed-form fountain kinematics."""

import math
from typing import Literal

from scipy.constants import Boltzmann, atomic_mass
from scipy.constants import g as STANDARD_GRAVITY

from ..utils.error_handler import ConfigurationError
from .models import RB87_D2_WAVELENGTH, LaunchConfig

RB87_MASS = 86.909180531 * atomic_mass


def launch_velocity(config: LaunchConfig) -> float:
    """Moving-molasses launch speed v = sqrt(2)·λ·Δf."""
    return math.sqrt(2.0) * config.wavelength * config.detuning


def launch_detuning_for_height(
    height: float,
    wavelength: float = RB87_D2_WAVELENGTH,
    gravity: float = STANDARD_GRAVITY,
) -> float:
    """Δf that puts the apex of the flight ``height`` above the MOT."""
    if height < 0:
        raise ConfigurationError([f"height must be >= 0, got {height}"])
    return math.sqrt(gravity * height) / wavelength


def max_interaction_time(
    mode_diameter: float,
    gravity: float = STANDARD_GRAVITY,
    span: Literal["full", "half"] = "full",
) -> float:
    """
    Longest time an atom thrown to its apex can spend inside the mode.

    ``span="full"`` evaluates 2·sqrt(2d/g) with d the mode diameter. With
    ``span="half"`` d is the half-span above the entry point (the apex sits
    at the mode centre), which is the time an apex-centred atom spends
    inside the waist.
    """
    if mode_diameter < 0 or gravity <= 0:
        raise ConfigurationError(["mode_diameter must be >= 0 and gravity > 0"])
    if span not in ("full", "half"):
        raise ConfigurationError([f"span must be 'full' or 'half', got {span!r}"])
    d = mode_diameter if span == "full" else 0.5 * mode_diameter
    return 2.0 * math.sqrt(2.0 * d / gravity)


def thermal_velocity_sigma(temperature: float, mass: float = RB87_MASS) -> float:
    """One-dimensional Maxwell-Boltzmann velocity spread sqrt(kB·T/m)."""
    if temperature < 0 or mass <= 0:
        raise ConfigurationError(["temperature must be >= 0 and mass > 0"])
    return math.sqrt(Boltzmann * temperature / mass)


def apex_time(config: LaunchConfig) -> float:
    """Time after launch at which a centred atom reaches its apex."""
    return launch_velocity(config) / config.gravity
