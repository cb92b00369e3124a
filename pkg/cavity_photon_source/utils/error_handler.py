"""
Error types and classification for the photon source simulator.

Every failure a run can hit maps onto one category, and every category maps
onto one CLI exit code. Numerical guards raise instead of repairing data.
"""

import functools
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, TypeVar

import structlog

logger = structlog.get_logger(__name__)

F = TypeVar("F", bound=Callable[..., Any])


class ErrorCategory(Enum):
    """Error category classification"""
    CONFIGURATION = "configuration"
    INFEASIBLE_PULSE = "infeasible_pulse"
    INSUFFICIENT_STATISTICS = "insufficient_statistics"
    NUMERICAL = "numerical"
    DATA_FORMAT = "data_format"
    UNEXPECTED = "unexpected"


EXIT_CODES: Dict[ErrorCategory, int] = {
    ErrorCategory.CONFIGURATION: 2,
    ErrorCategory.INFEASIBLE_PULSE: 3,
    ErrorCategory.INSUFFICIENT_STATISTICS: 4,
    ErrorCategory.NUMERICAL: 1,
    ErrorCategory.DATA_FORMAT: 1,
    ErrorCategory.UNEXPECTED: 1,
}


class PhotonSourceError(Exception):
    """Base class for all simulator errors."""

    category: ErrorCategory = ErrorCategory.UNEXPECTED


class ConfigurationError(PhotonSourceError, ValueError):
    """Invalid scenario configuration; lists every violated invariant."""

    category = ErrorCategory.CONFIGURATION

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid configuration")


class InfeasibleTargetError(PhotonSourceError):
    """The |e,0> population budget runs out before the target photon is emitted."""

    category = ErrorCategory.INFEASIBLE_PULSE

    def __init__(self, c_e_floor: float, t_exhausted: Optional[float], p_target: float):
        self.c_e_floor = c_e_floor
        self.t_exhausted = t_exhausted
        self.p_target = p_target
        where = "" if t_exhausted is None else f" at t={t_exhausted * 1e9:.1f} ns"
        super().__init__(
            f"target with P={p_target:.3f} is infeasible: |c_e|^2 falls to "
            f"{c_e_floor:.3e}{where}; lower P_target or slow the shape down"
        )


class InsufficientStatisticsError(PhotonSourceError):
    """Too few events for a statistic to be meaningful."""

    category = ErrorCategory.INSUFFICIENT_STATISTICS


class NormViolationError(PhotonSourceError, ArithmeticError):
    """Probability bookkeeping drifted beyond tolerance; the step is too large."""

    category = ErrorCategory.NUMERICAL

    def __init__(self, max_deviation: float, tolerance: float, dt: float):
        self.max_deviation = max_deviation
        self.tolerance = tolerance
        self.dt = dt
        super().__init__(
            f"norm deviates by {max_deviation:.2e} (> {tolerance:.0e}) at dt={dt:.3e} s; "
            "reduce the integration step"
        )


class NonUniformGridError(PhotonSourceError, ValueError):
    """Time grid is not uniformly spaced or does not match another series."""

    category = ErrorCategory.NUMERICAL


class EdgeSingularityError(PhotonSourceError, ArithmeticError):
    """Derivatives of a target diverge at the window edges."""

    category = ErrorCategory.NUMERICAL


class UnsortedStreamError(PhotonSourceError, ValueError):
    """Click timestamps are not sorted."""

    category = ErrorCategory.DATA_FORMAT


class ScheduleOverlapError(PhotonSourceError, ValueError):
    """Drive and repump windows overlap or leave the pulse period."""

    category = ErrorCategory.CONFIGURATION


class ClickFormatError(PhotonSourceError, ValueError):
    """A click-stream file is malformed."""

    category = ErrorCategory.DATA_FORMAT


class UnknownShapeError(PhotonSourceError, KeyError):
    """Requested a shape the catalog does not provide."""

    category = ErrorCategory.CONFIGURATION


def classify_error(exception: BaseException) -> ErrorCategory:
    """
    Classify an exception into an error category.

    Args:
        exception: The exception to classify

    Returns:
        ErrorCategory of the exception
    """
    if isinstance(exception, PhotonSourceError):
        return exception.category

    # pydantic validation errors surface from config loading
    if type(exception).__name__ == "ValidationError":
        return ErrorCategory.CONFIGURATION

    if isinstance(exception, (FileNotFoundError, IsADirectoryError)):
        return ErrorCategory.CONFIGURATION

    if isinstance(exception, (FloatingPointError, ArithmeticError)):
        return ErrorCategory.NUMERICAL

    return ErrorCategory.UNEXPECTED


def exit_code_for(exception: BaseException) -> int:
    """Exit status a CLI command reports for an exception."""
    return EXIT_CODES[classify_error(exception)]


def handle_command_errors(on_error: Optional[Callable[[BaseException, int], None]] = None):
    """
    Decorator converting raised errors into logged failures with an exit code.

    The wrapped command returns 0 on success; on failure the exception is
    logged with its category and the mapped exit code is returned (and passed
    to ``on_error`` when given).

    Example:
        @handle_command_errors()
        def run_design(config_path):
            ...
    """

    def decorator(func: F) -> F:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> int:
            try:
                func(*args, **kwargs)
                return 0
            except Exception as e:
                category = classify_error(e)
                code = EXIT_CODES[category]
                logger.error(
                    "command_failed",
                    command=func.__name__,
                    error_type=type(e).__name__,
                    error_category=category.value,
                    exit_code=code,
                    error=str(e),
                    exc_info=category is ErrorCategory.UNEXPECTED,
                )
                if on_error is not None:
                    on_error(e, code)
                return code

        return wrapper  # type: ignore[return-value]

    return decorator
