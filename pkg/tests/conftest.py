"""Shared fixtures: published atom-cavity constants, a designed sin² drive, short schedules."""

from typing import Any, Callable, Dict

import pytest

from cavity_photon_source.config import ScenarioConfig, build_scenario, reset_settings
from cavity_photon_source.photostream.models import PulseSchedule
from cavity_photon_source.qsim.emission_table import EmissionTable
from cavity_photon_source.qsim.models import LambdaSystemParams
from cavity_photon_source.shaping.catalog import catalog_shape
from cavity_photon_source.shaping.inversion import invert_target


@pytest.fixture(scope="session")
def params() -> LambdaSystemParams:
    """2π × (12, 12, 3) MHz."""
    return LambdaSystemParams()


@pytest.fixture(scope="session")
def sin2_target():
    return catalog_shape("sin2", 350e-9, 0.66)


@pytest.fixture(scope="session")
def designed_drive(params, sin2_target):
    return invert_target(params, sin2_target).omega


@pytest.fixture(scope="session")
def emission_table(params, designed_drive) -> EmissionTable:
    return EmissionTable(params, designed_drive, n_couplings=11)


@pytest.fixture
def schedule() -> PulseSchedule:
    return PulseSchedule()


@pytest.fixture
def short_schedule() -> PulseSchedule:
    """200 pulses per 2 ms shot."""
    return PulseSchedule(shot_period=2e-3, gate_start=1e-3, gate_duration=200e-6)


@pytest.fixture
def make_scenario(tmp_path) -> Callable[..., ScenarioConfig]:
    """Build a validated scenario from section overrides, writing under tmp_path."""

    def factory(**sections: Dict[str, Any]) -> ScenarioConfig:
        data: Dict[str, Any] = {k: dict(v) for k, v in sections.items()}
        data.setdefault("run", {}).setdefault("output_dir", str(tmp_path / "out"))
        return build_scenario(data)

    return factory


@pytest.fixture
def stationary_sections() -> Dict[str, Dict[str, Any]]:
    """An atom held at g0 with no dark counts over a short gate."""
    return {
        "chain": {"dark_rate_hz": 0.0},
        "run": {
            "mode": "stationary",
            "n_shots": 10,
            "rng_seed": 7,
            "gate_start": 0.030,
            "gate_duration": 0.002,
        },
        "analysis": {"g2_max_tau": 20e-6, "k_pulses": 10},
    }


@pytest.fixture(autouse=True)
def _fresh_settings():
    reset_settings()
    yield
    reset_settings()
