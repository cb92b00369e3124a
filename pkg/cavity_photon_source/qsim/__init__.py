"""Atom-cavity Lambda-system dynamics and quantum-jump sampling."""

from .cavity import CavityParams, MirrorSet, derive_cavity_params
from .emission_table import EmissionTable
from .integrator import default_time_step, evolve_amplitudes
from .models import (
    OUTCOME_CODES,
    EmissionOutcome,
    EnvelopeKind,
    LambdaSystemParams,
    OutcomeKind,
    PulseEnvelope,
    QuantumState,
    StateHistory,
)
from .trajectory import repump, repump_cycles, run_trajectory, sample_jumps, sample_outcomes

__all__ = [
    "CavityParams",
    "MirrorSet",
    "derive_cavity_params",
    "EmissionTable",
    "default_time_step",
    "evolve_amplitudes",
    "OUTCOME_CODES",
    "EmissionOutcome",
    "EnvelopeKind",
    "LambdaSystemParams",
    "OutcomeKind",
    "PulseEnvelope",
    "QuantumState",
    "StateHistory",
    "repump",
    "repump_cycles",
    "run_trajectory",
    "sample_jumps",
    "sample_outcomes",
]
