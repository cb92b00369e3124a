"""Algebraic inversion of the resonant Lambda-system equations.

Gauge: φ real and non-negative, c_g = -s with s = φ/sqrt(2κ), c_x = -i·a with
a real, c_e real and positive. The equations of motion then reduce to

    a   = (ds/dt + κ s) / g0
    Ω   = 2 (da/dt + γ a + g0 s) / c_e
    c_e = sqrt(1 - a² - s² - ∫ (2γ a² + 2κ s²) dt)

so the drive follows from the target by two derivatives and one running
integral. The forward solver reproduces φ up to an overall sign.
"""

from typing import Optional, Tuple

import numpy as np
import structlog
from scipy.integrate import cumulative_trapezoid

from ..qsim.models import EnvelopeKind, LambdaSystemParams, PulseEnvelope
from ..utils.error_handler import ConfigurationError, EdgeSingularityError, InfeasibleTargetError
from .models import InversionResult, ShapeTarget

logger = structlog.get_logger(__name__)

# |c_e|² must stay above this over the open window
FEASIBILITY_MARGIN = 1e-6


def excited_population_budget(
    params: LambdaSystemParams, target: ShapeTarget
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """|c_e(t)|² left over while emitting the target, with s and a.

    Returns:
        (population, s, a) on the target grid
    """
    dt = target.phi_target.dt
    phi = np.real(target.phi_target.values)
    s = phi / np.sqrt(2.0 * params.kappa)
    s_dot = np.gradient(s, dt, edge_order=2)
    a = (s_dot + params.kappa * s) / params.g0

    leaked = cumulative_trapezoid(2.0 * params.gamma * a**2 + 2.0 * params.kappa * s**2, dx=dt, initial=0.0)
    population = 1.0 - a**2 - s**2 - leaked
    return population, s, a


def invert_target(
    params: LambdaSystemParams,
    target: ShapeTarget,
    margin: float = FEASIBILITY_MARGIN,
    strict: bool = True,
) -> InversionResult:
    """
    Compute the drive Ω(t) that makes a stationary atom at g0 emit ``target``.

    Args:
        params: Atom-cavity constants; must be resonant
        target: Normalized photon amplitude
        margin: Smallest admissible |c_e|² inside the window
        strict: Raise on an infeasible target instead of returning
            ``feasible=False`` with a drive computed from the clamped budget

    Returns:
        InversionResult with Ω on the target grid

    Raises:
        ConfigurationError: detuned system or complex/negative target
        InfeasibleTargetError: the |e,0> budget runs out inside the window
        EdgeSingularityError: the drive is not finite
    """
    violations = []
    if not params.resonant:
        violations.append("pulse inversion assumes a resonant system (delta_c = delta_l = 0)")
    values = target.phi_target.values
    if np.iscomplexobj(values) and np.any(np.imag(values) != 0):
        violations.append("pulse inversion needs a real target amplitude")
    if np.any(np.real(values) < 0):
        violations.append("pulse inversion needs a non-negative target amplitude")
    if violations:
        raise ConfigurationError(violations)

    t = target.t
    dt = target.phi_target.dt
    population, s, a = excited_population_budget(params, target)

    interior = population[1:-1]
    floor_idx = int(np.argmin(interior)) + 1
    c_e_floor = float(population[floor_idx])
    feasible = bool(np.all(interior >= margin))

    t_exhausted: Optional[float] = None
    if not feasible:
        below = np.nonzero(population[1:-1] < margin)[0]
        t_exhausted = float(t[below[0] + 1] - t[0])
        logger.warning(
            "target_infeasible",
            shape=target.name,
            p_target=target.p_target,
            c_e_floor=c_e_floor,
            t_exhausted=t_exhausted,
        )
        if strict:
            raise InfeasibleTargetError(c_e_floor, t_exhausted, target.p_target)

    c_e = np.sqrt(np.maximum(population, margin))
    a_dot = np.gradient(a, dt, edge_order=2)
    omega = 2.0 * (a_dot + params.gamma * a + params.g0 * s) / c_e
    # 0/0 limits at the edges: take the neighbouring interior value
    omega[0] = omega[1]
    omega[-1] = omega[-2]

    if not np.all(np.isfinite(omega)):
        raise EdgeSingularityError(
            f"drive for target '{target.name}' is not finite; the shape is not smooth enough at the grid"
        )

    logger.info(
        "target_inverted",
        shape=target.name,
        p_target=target.p_target,
        c_e_floor=c_e_floor,
        feasible=feasible,
        omega_max=float(np.max(np.abs(omega))),
    )
    return InversionResult(
        omega=PulseEnvelope(t=t, values=omega, kind=EnvelopeKind.RABI_DRIVE),
        c_e_floor=c_e_floor,
        feasible=feasible,
        excited_population=population,
        t_exhausted=t_exhausted,
    )
