"""
Scenario configuration and process settings.

A scenario is one TOML file with the sections [system], [launch], [mode],
[chain], [interferometer], [pulse], [run] and [analysis]. Every section is a
frozen pydantic model whose defaults reproduce the published experiment.
Field-level problems and cross-field inconsistencies are collected together
and raised as a single ConfigurationError.
"""

import hashlib
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple, Union

import orjson
import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .fountain.models import LaunchConfig, ModeGeometry
from .photostream.models import EfficiencyChain, InterferometerConfig, PulseSchedule
from .qsim.models import MHZ, TWO_PI, LambdaSystemParams
from .shaping.catalog import SHAPES
from .utils.error_handler import ConfigurationError, ScheduleOverlapError

logger = structlog.get_logger(__name__)

CONFIG_HASH_LENGTH = 16


class RuntimeSettings(BaseSettings):
    """Process-level settings read from CPS_* environment variables."""

    log_level: str = Field(default="INFO", description="Logging level")
    json_logs: bool = Field(default=False, description="Render logs as JSON")
    threads: int = Field(default=1, ge=1, description="Default worker threads for simulate")
    environment: str = Field(default="development", description="Deployment tag added to log lines")

    model_config = SettingsConfigDict(env_prefix="CPS_", case_sensitive=False)


class PulseConfig(BaseModel):
    """Photon shape and the per-period timing of drive and repump."""

    model_config = ConfigDict(frozen=True)

    shape: str = Field(default="sin2", description="Catalog shape name")
    duration: float = Field(default=350e-9, gt=0, description="Drive window length (s)")
    p_target: float = Field(default=0.66, gt=0, le=1, description="Designed emission probability")
    custom_amplitudes: Optional[Tuple[float, ...]] = Field(
        default=None, description="Sampled amplitude for the custom shape"
    )
    dt: Optional[float] = Field(default=None, gt=0, description="Design grid spacing (s)")
    repetition_rate_hz: float = Field(default=1e6, gt=0, description="Pulse repetition rate")
    repump_start: float = Field(default=400e-9, ge=0, description="Repump window start within a period (s)")
    repump_duration: float = Field(default=500e-9, ge=0, description="Repump window length (s)")
    p_repump: float = Field(default=1.0, ge=0, le=1, description="Probability the repump restores |e>")
    band_limit_hz: Optional[float] = Field(default=5e6, gt=0, description="Drive bandwidth; None disables")
    strict_feasibility: bool = Field(default=True, description="Fail on an infeasible target")
    n_couplings: int = Field(default=41, ge=2, description="Coupling grid of the emission table")
    refractive_index: float = Field(default=1.46, gt=0, description="Fiber index for spatial profiles")

    @property
    def period(self) -> float:
        return 1.0 / self.repetition_rate_hz


class RunConfig(BaseModel):
    """Shots, seed, gate and output location."""

    model_config = ConfigDict(frozen=True)

    n_shots: int = Field(default=1000, ge=1, description="Number of fountain launches")
    rng_seed: int = Field(default=0, ge=0, description="Master seed")
    output_dir: str = Field(default="output", description="Directory receiving run artifacts")
    mode: Literal["fountain", "stationary"] = Field(
        default="fountain", description="Moving atoms, or one atom held at a fixed coupling"
    )
    stationary_coupling: float = Field(
        default=1.0, gt=0, le=1, description="Coupling of the held atom as a fraction of g0"
    )
    shot_period: float = Field(default=0.1, gt=0, description="Time between launches (s)")
    gate_start: float = Field(default=0.030, ge=0, description="Measurement gate start after launch (s)")
    gate_duration: float = Field(default=0.020, gt=0, description="Measurement gate length (s)")
    target_overlap_fraction: Optional[float] = Field(
        default=None, gt=0, lt=1, description="Calibrate atom_flux to this two-atom overlap fraction"
    )
    target_visibility: Optional[float] = Field(
        default=None, gt=0, le=1, description="Calibrate dephasing to this two-photon visibility"
    )
    format: Literal["text", "binary"] = Field(default="text", description="Click-stream file format")
    shots_per_task: int = Field(default=50, ge=1, description="Shots handed to one worker at a time")


class AnalysisConfig(BaseModel):
    """Binning and thresholds of the statistics suite."""

    model_config = ConfigDict(frozen=True)

    g2_bin_width: float = Field(default=20e-9, gt=0)
    g2_max_tau: float = Field(default=300e-6, gt=0)
    hom_bin_width: float = Field(default=10e-9, gt=0)
    hom_max_tau: float = Field(default=2e-6, gt=0)
    selection_bin_width: float = Field(default=100e-6, gt=0)
    selection_thresholds: Tuple[int, ...] = Field(default=(3, 5, 7))
    shape_bins: int = Field(default=50, ge=2)
    k_pulses: int = Field(default=40, ge=5)
    min_conditioning_events: int = Field(default=100, ge=1)
    side_peaks: int = Field(default=4, ge=1)

    @field_validator("selection_thresholds")
    @classmethod
    def _thresholds_positive(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if not value or any(v < 1 for v in value):
            raise ValueError("selection thresholds must be a non-empty list of counts >= 1")
        return tuple(sorted(value))


class ScenarioConfig(BaseModel):
    """One complete experiment."""

    model_config = ConfigDict(frozen=True)

    system: LambdaSystemParams = Field(default_factory=LambdaSystemParams)
    launch: LaunchConfig = Field(default_factory=LaunchConfig)
    mode: ModeGeometry = Field(default_factory=ModeGeometry)
    chain: EfficiencyChain = Field(default_factory=EfficiencyChain)
    interferometer: InterferometerConfig = Field(default_factory=InterferometerConfig)
    pulse: PulseConfig = Field(default_factory=PulseConfig)
    run: RunConfig = Field(default_factory=RunConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)

    @field_validator("system", mode="before")
    @classmethod
    def _rates_in_mhz(cls, value: Any) -> Any:
        """Accept g0_mhz / kappa_mhz / gamma_mhz (ν in MHz) next to rates in rad/s."""
        if not isinstance(value, Mapping):
            return value
        data = dict(value)
        for name in ("g0", "kappa", "gamma"):
            key = f"{name}_mhz"
            if key in data:
                if name in data:
                    raise ValueError(f"give either {name} or {key}, not both")
                data[name] = TWO_PI * float(data.pop(key)) * MHZ
        return data

    def schedule(self) -> PulseSchedule:
        """Pulse timing of the run; raises ScheduleOverlapError when inconsistent."""
        return PulseSchedule(
            period=self.pulse.period,
            drive_start=0.0,
            drive_duration=self.pulse.duration,
            repump_start=self.pulse.repump_start,
            repump_duration=self.pulse.repump_duration,
            shot_period=self.run.shot_period,
            gate_start=self.run.gate_start,
            gate_duration=self.run.gate_duration,
        )

    def cross_field_violations(self) -> List[str]:
        """Every inconsistency between sections, as readable messages."""
        violations: List[str] = []
        schedule: Optional[PulseSchedule] = None
        try:
            schedule = self.schedule()
        except ScheduleOverlapError as e:
            violations.extend(f"schedule: {v}" for v in str(e).split("; "))

        if self.pulse.shape not in SHAPES:
            violations.append(f"pulse.shape: unknown shape '{self.pulse.shape}' (available: {', '.join(SHAPES)})")
        if self.pulse.shape == "custom" and self.pulse.custom_amplitudes is None:
            violations.append("pulse.custom_amplitudes: required for the custom shape")

        if self.interferometer.kind == "HOM":
            try:
                delay_periods = self.interferometer.delay_periods(self.pulse.period)
            except ScheduleOverlapError as e:
                violations.append(f"interferometer.delay_s: {e}")
            else:
                if schedule is not None and 2 * delay_periods > schedule.pulses_per_gate:
                    violations.append("interferometer.delay_s: a delay block does not fit inside the gate")

        if schedule is not None and self.analysis.k_pulses >= schedule.pulses_per_gate:
            violations.append("analysis.k_pulses: must be smaller than the number of pulses per gate")
        for name in ("g2", "hom"):
            width = getattr(self.analysis, f"{name}_bin_width")
            max_tau = getattr(self.analysis, f"{name}_max_tau")
            if max_tau <= width:
                violations.append(f"analysis.{name}_max_tau: must exceed analysis.{name}_bin_width")
        if self.run.mode == "stationary" and self.run.target_overlap_fraction is not None:
            violations.append("run.target_overlap_fraction: only applies to fountain runs")
        if self.run.target_visibility is not None and self.interferometer.kind != "HOM":
            violations.append("run.target_visibility: only applies to HOM runs")
        return violations

    def with_run(self, **updates: Any) -> "ScenarioConfig":
        """Copy with [run] fields replaced, re-validated."""
        data = self.model_dump()
        data["run"] = {**data["run"], **updates}
        return build_scenario(data)


def _format_validation_error(error: ValidationError) -> List[str]:
    return [f"{'.'.join(str(p) for p in item['loc'])}: {item['msg']}" for item in error.errors()]


def build_scenario(data: Mapping[str, Any]) -> ScenarioConfig:
    """
    Validate a nested mapping into a ScenarioConfig.

    Raises:
        ConfigurationError: listing every field and cross-field violation
    """
    unknown = sorted(set(data) - set(ScenarioConfig.model_fields))
    violations = [f"{name}: unknown section" for name in unknown]
    try:
        config = ScenarioConfig(**{k: v for k, v in data.items() if k not in unknown})
    except ValidationError as e:
        raise ConfigurationError(violations + _format_validation_error(e)) from e
    violations.extend(config.cross_field_violations())
    if violations:
        raise ConfigurationError(violations)
    return config


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    """Read and validate a TOML scenario file."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError([f"{path}: {e}"]) from e
    config = build_scenario(data)
    logger.info("scenario_loaded", path=str(path), config_hash=config_hash(config))
    return config


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def config_dict(config: ScenarioConfig) -> Dict[str, Any]:
    """Canonical JSON-compatible form of a config."""
    return _json_safe(config.model_dump(mode="python"))


def config_hash(config: ScenarioConfig) -> str:
    """First 16 hex digits of SHA-256 over the sorted-key JSON of the config."""
    canonical = orjson.dumps(config_dict(config), option=orjson.OPT_SORT_KEYS)
    return hashlib.sha256(canonical).hexdigest()[:CONFIG_HASH_LENGTH]


# Global settings instance
_settings_instance: Optional[RuntimeSettings] = None


def get_settings() -> RuntimeSettings:
    """Get the global runtime settings instance."""
    global _settings_instance
    if _settings_instance is None:
        _settings_instance = RuntimeSettings()
    return _settings_instance


def reset_settings() -> None:
    """Drop the cached settings so the next call re-reads the environment."""
    global _settings_instance
    _settings_instance = None
