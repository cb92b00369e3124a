"""From emitted photons to detector click streams."""

from .click_format import MAGIC, read_clicks, write_clicks
from .interferometer import HomRouting, route_hbt, route_hom, two_photon_coincidence_probability
from .models import (
    CLICK_DTYPE,
    FLAG_IN_REPUMP_WINDOW,
    ClickOrigin,
    ClickRecord,
    ClickStream,
    Detector,
    EfficiencyChain,
    InterferometerConfig,
    PhotonBatch,
    PulseSchedule,
)
from .synthesis import synthesize_clicks

__all__ = [
    "MAGIC",
    "read_clicks",
    "write_clicks",
    "HomRouting",
    "route_hbt",
    "route_hom",
    "two_photon_coincidence_probability",
    "CLICK_DTYPE",
    "FLAG_IN_REPUMP_WINDOW",
    "ClickOrigin",
    "ClickRecord",
    "ClickStream",
    "Detector",
    "EfficiencyChain",
    "InterferometerConfig",
    "PhotonBatch",
    "PulseSchedule",
    "synthesize_clicks",
]
