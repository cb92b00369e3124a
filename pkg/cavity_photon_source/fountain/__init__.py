"""Atomic-fountain delivery of atoms through the cavity mode."""

from .kinematics import (
    RB87_MASS,
    apex_time,
    launch_detuning_for_height,
    launch_velocity,
    max_interaction_time,
    thermal_velocity_sigma,
)
from .models import AtomTransit, LaunchConfig, ModeGeometry
from .transits import (
    CLIP_LEVEL,
    calibrate_atom_flux,
    clip_radius,
    overlap_fraction,
    sample_shot,
    sample_transits,
)

__all__ = [
    "RB87_MASS",
    "apex_time",
    "launch_detuning_for_height",
    "launch_velocity",
    "max_interaction_time",
    "thermal_velocity_sigma",
    "AtomTransit",
    "LaunchConfig",
    "ModeGeometry",
    "CLIP_LEVEL",
    "calibrate_atom_flux",
    "clip_radius",
    "overlap_fraction",
    "sample_shot",
    "sample_transits",
]
