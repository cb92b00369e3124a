"""Error handling and seeding utilities."""

from .error_handler import (
    ClickFormatError,
    ConfigurationError,
    EdgeSingularityError,
    ErrorCategory,
    InfeasibleTargetError,
    InsufficientStatisticsError,
    NonUniformGridError,
    NormViolationError,
    PhotonSourceError,
    ScheduleOverlapError,
    UnknownShapeError,
    UnsortedStreamError,
    classify_error,
    exit_code_for,
    handle_command_errors,
)
from .seeding import Seed, keyed_rng, make_rng, seed_sequence

__all__ = [
    "ClickFormatError",
    "ConfigurationError",
    "EdgeSingularityError",
    "ErrorCategory",
    "InfeasibleTargetError",
    "InsufficientStatisticsError",
    "NonUniformGridError",
    "NormViolationError",
    "PhotonSourceError",
    "ScheduleOverlapError",
    "UnknownShapeError",
    "UnsortedStreamError",
    "classify_error",
    "exit_code_for",
    "handle_command_errors",
    "Seed",
    "keyed_rng",
    "make_rng",
    "seed_sequence",
]
