"""Named photon shapes and the time-to-fiber-position mapping."""

from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence

import numpy as np
import structlog
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.integrate import trapezoid
from scipy.ndimage import gaussian_filter1d

from ..qsim.models import EnvelopeKind, PulseEnvelope
from ..utils.error_handler import ConfigurationError, UnknownShapeError
from .models import ShapeTarget, SpatialProfile

logger = structlog.get_logger(__name__)

DEFAULT_DT = 0.5e-9
SHAPES = ("sin2", "tower_bridge", "custom")
# silhouette corners are rounded over this fraction of the window
TOWER_BRIDGE_SMOOTHING = 0.01


@lru_cache(maxsize=1)
def load_tower_bridge() -> np.ndarray:
    """Bundled (t_frac, amplitude) silhouette table."""
    with resources.files(__package__).joinpath("data/tower_bridge.tsv").open("r") as fh:
        table = np.loadtxt(fh, comments="#", delimiter="\t")
    table.setflags(write=False)
    return table


def _grid(duration: float, dt: Optional[float], samples: Optional[int]) -> np.ndarray:
    if samples is None:
        samples = int(round(duration / (dt or DEFAULT_DT))) + 1
    if samples < 3:
        raise ConfigurationError([f"a shape needs at least 3 samples, got {samples}"])
    return np.linspace(0.0, duration, samples)


def _normalize(t: np.ndarray, shape: np.ndarray, p_target: float) -> np.ndarray:
    area = trapezoid(shape**2, t)
    if area <= 0:
        raise ConfigurationError(["shape has zero area"])
    return shape * np.sqrt(p_target / area)


def _tower_bridge(t: np.ndarray, duration: float) -> np.ndarray:
    table = load_tower_bridge()
    shape = np.interp(t / duration, table[:, 0], table[:, 1])
    sigma = TOWER_BRIDGE_SMOOTHING * (t.size - 1)
    shape = gaussian_filter1d(shape, sigma, mode="constant", cval=0.0)
    shape[0] = shape[-1] = 0.0
    return shape


def _custom(t: np.ndarray, amplitudes: Optional[Sequence[float]]) -> np.ndarray:
    if amplitudes is None:
        raise ConfigurationError(["custom shape needs sampled amplitudes"])
    values = np.asarray(amplitudes, dtype=float)
    if values.ndim != 1 or values.size < 3:
        raise ConfigurationError(["custom amplitudes must be a 1-D series of at least 3 samples"])
    scale = max(float(np.max(np.abs(values))), 1e-300)
    if abs(values[0]) > 1e-9 * scale or abs(values[-1]) > 1e-9 * scale:
        raise ConfigurationError(["custom shape must vanish at both window edges"])
    if np.any(values < 0):
        raise ConfigurationError(["custom shape amplitudes must be non-negative"])
    if values.size != t.size:
        values = np.interp(t, np.linspace(t[0], t[-1], values.size), values)
    return values


def catalog_shape(
    name: str,
    duration: float,
    p_target: float,
    dt: Optional[float] = None,
    samples: Optional[int] = None,
    amplitudes: Optional[Sequence[float]] = None,
) -> ShapeTarget:
    """
    Build a normalized target photon amplitude.

    Args:
        name: sin2, tower_bridge or custom
        duration: Window length (s)
        p_target: Emission probability the shape integrates to, in (0, 1]
        dt: Grid spacing (default 0.5 ns); ignored when ``samples`` is set
        samples: Number of grid points including both edges
        amplitudes: Sampled shape for ``custom``, uniformly spaced over the window

    Raises:
        UnknownShapeError: unsupported name
        ConfigurationError: bad duration, P_target or custom samples
    """
    if name not in SHAPES:
        raise UnknownShapeError(f"unknown shape '{name}'; available: {', '.join(SHAPES)}")
    violations = []
    if not duration > 0:
        violations.append(f"duration must be > 0, got {duration}")
    if not 0.0 < p_target <= 1.0:
        violations.append(f"P_target must lie in (0, 1], got {p_target}")
    if violations:
        raise ConfigurationError(violations)

    t = _grid(duration, dt, samples)
    if name == "sin2":
        shape = np.sin(np.pi * t / duration) ** 2
        shape[0] = shape[-1] = 0.0
    elif name == "tower_bridge":
        shape = _tower_bridge(t, duration)
    else:
        shape = _custom(t, amplitudes)

    phi = _normalize(t, shape, p_target)
    logger.debug("shape_built", shape=name, duration=duration, p_target=p_target, samples=t.size)
    return ShapeTarget(
        phi_target=PulseEnvelope(t=t, values=phi, kind=EnvelopeKind.TARGET_PHOTON_AMPLITUDE),
        p_target=p_target,
        name=name,
    )


def spatial_profile(envelope: PulseEnvelope, refractive_index: float = 1.0) -> SpatialProfile:
    """Map a photon amplitude in time onto its probability density along a fiber.

    A photon leaving the source over the window occupies x = c·t/n; the
    density is rescaled so it still integrates to the emission probability.
    """
    if not refractive_index >= 1.0:
        raise ConfigurationError([f"refractive index must be >= 1, got {refractive_index}"])
    velocity = SPEED_OF_LIGHT / refractive_index
    x = velocity * (envelope.t - envelope.t[0])
    density = np.abs(envelope.values) ** 2 / velocity
    return SpatialProfile(x=x, density=density)
