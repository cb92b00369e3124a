"""Inverse design of drive pulses for prescribed photon shapes."""

from .band_limit import band_limit, gaussian_response, gaussian_sigma_for_cutoff
from .catalog import SHAPES, catalog_shape, load_tower_bridge, spatial_profile
from .inversion import FEASIBILITY_MARGIN, excited_population_budget, invert_target
from .models import InversionResult, ShapeTarget, SpatialProfile

__all__ = [
    "band_limit",
    "gaussian_response",
    "gaussian_sigma_for_cutoff",
    "SHAPES",
    "catalog_shape",
    "load_tower_bridge",
    "spatial_profile",
    "FEASIBILITY_MARGIN",
    "excited_population_budget",
    "invert_target",
    "InversionResult",
    "ShapeTarget",
    "SpatialProfile",
]
