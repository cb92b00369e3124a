"""Types produced and consumed by the pulse shaper."""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.integrate import trapezoid

from ..qsim.models import EnvelopeKind, PulseEnvelope
from ..utils.error_handler import ConfigurationError

EDGE_TOLERANCE = 1e-9
NORM_RTOL = 1e-6


@dataclass(frozen=True)
class ShapeTarget:
    """A photon amplitude to be produced, normalized to its emission probability."""

    phi_target: PulseEnvelope
    p_target: float
    name: str = "custom"

    def __post_init__(self) -> None:
        violations = []
        if self.phi_target.kind is not EnvelopeKind.TARGET_PHOTON_AMPLITUDE:
            violations.append(f"phi_target must be a target_photon_amplitude, got {self.phi_target.kind.value}")
        if not 0.0 < self.p_target <= 1.0:
            violations.append(f"P_target must lie in (0, 1], got {self.p_target}")

        values = self.phi_target.values
        if not np.all(np.isfinite(values)):
            violations.append("phi_target contains non-finite samples")
        else:
            scale = max(float(np.max(np.abs(values))), 1.0)
            if abs(values[0]) > EDGE_TOLERANCE * scale or abs(values[-1]) > EDGE_TOLERANCE * scale:
                violations.append("phi_target must vanish at both window edges")
            if 0.0 < self.p_target <= 1.0:
                norm = self.norm
                if not np.isclose(norm, self.p_target, rtol=NORM_RTOL, atol=0.0):
                    violations.append(
                        f"integral of |phi_target|^2 is {norm:.6g}, expected P_target={self.p_target:.6g}"
                    )
        if violations:
            raise ConfigurationError(violations)

    @property
    def t(self) -> np.ndarray:
        return self.phi_target.t

    @property
    def duration(self) -> float:
        return self.phi_target.duration

    @property
    def norm(self) -> float:
        return float(trapezoid(np.abs(self.phi_target.values) ** 2, self.phi_target.t))

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.phi_target.values) ** 2


@dataclass(frozen=True)
class InversionResult:
    """Drive envelope computed for a target, with its population budget."""

    omega: PulseEnvelope
    c_e_floor: float
    feasible: bool
    excited_population: np.ndarray
    t_exhausted: Optional[float] = None

    def to_records(self) -> Dict[str, np.ndarray]:
        return {
            "t_s": self.omega.t,
            "omega_rad_s": np.real(self.omega.values),
            "pop_e": self.excited_population,
        }


@dataclass(frozen=True)
class SpatialProfile:
    """Photon probability density along a fiber, x = c·t/n."""

    x: np.ndarray
    density: np.ndarray

    def to_records(self) -> Dict[str, np.ndarray]:
        return {"x_m": self.x, "density_per_m": self.density}
