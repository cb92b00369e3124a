"""Unit tests for scenario configuration and runtime settings."""

import math
from pathlib import Path

import pytest

from cavity_photon_source.config import (
    build_scenario,
    config_dict,
    config_hash,
    get_settings,
    load_scenario,
    reset_settings,
)
from cavity_photon_source.utils.error_handler import ConfigurationError

pytestmark = pytest.mark.unit

SCENARIOS = Path(__file__).resolve().parents[2] / "config" / "scenarios"


class TestBuildScenario:
    """Test validation of nested scenario mappings."""

    def test_defaults_reproduce_published_setup(self):
        config = build_scenario({})
        schedule = config.schedule()
        assert config.system.g0 == pytest.approx(2 * math.pi * 12e6)
        assert config.pulse.shape == "sin2"
        assert config.pulse.p_target == 0.66
        assert schedule.pulses_per_gate == 20_000
        assert config.chain.total == pytest.approx(0.2275)

    def test_rates_given_in_mhz(self):
        config = build_scenario({"system": {"g0_mhz": 10.0, "gamma_mhz": 2.0}})
        assert config.system.g0 == pytest.approx(2 * math.pi * 10e6)
        assert config.system.gamma == pytest.approx(2 * math.pi * 2e6)

    def test_rate_given_twice(self):
        with pytest.raises(ConfigurationError):
            build_scenario({"system": {"g0": 1e7, "g0_mhz": 10.0}})

    def test_field_violations_collected(self):
        """Test every bad field is listed in one error."""
        with pytest.raises(ConfigurationError) as exc:
            build_scenario({"bogus": {}, "pulse": {"p_target": 1.5}, "run": {"n_shots": 0}})
        violations = exc.value.violations
        assert "bogus: unknown section" in violations
        assert any(v.startswith("pulse.p_target") for v in violations)
        assert any(v.startswith("run.n_shots") for v in violations)

    def test_cross_field_violations_collected(self):
        with pytest.raises(ConfigurationError) as exc:
            build_scenario({"pulse": {"shape": "nope"}, "run": {"gate_duration": 200e-6}, "analysis": {"k_pulses": 300}})
        violations = exc.value.violations
        assert len(violations) == 2
        assert any("unknown shape 'nope'" in v for v in violations)
        assert any(v.startswith("analysis.k_pulses") for v in violations)

    def test_custom_shape_needs_amplitudes(self):
        with pytest.raises(ConfigurationError, match="custom_amplitudes"):
            build_scenario({"pulse": {"shape": "custom"}})

    def test_repump_overlapping_drive(self):
        with pytest.raises(ConfigurationError, match="schedule: drive window"):
            build_scenario({"pulse": {"repump_start": 300e-9}})

    def test_hom_delay_off_grid(self):
        with pytest.raises(ConfigurationError, match="interferometer.delay_s"):
            build_scenario({"interferometer": {"kind": "HOM", "delay_s": 1.5e-6}})

    def test_visibility_target_needs_hom(self):
        with pytest.raises(ConfigurationError, match="run.target_visibility"):
            build_scenario({"run": {"target_visibility": 0.87}})

    def test_overlap_target_needs_fountain(self):
        with pytest.raises(ConfigurationError, match="run.target_overlap_fraction"):
            build_scenario({"run": {"mode": "stationary", "target_overlap_fraction": 0.01}})

    def test_selection_thresholds_sorted(self):
        config = build_scenario({"analysis": {"selection_thresholds": [7, 3, 5]}})
        assert config.analysis.selection_thresholds == (3, 5, 7)

    def test_with_run_revalidates(self):
        config = build_scenario({})
        assert config.with_run(rng_seed=9).run.rng_seed == 9
        with pytest.raises(ConfigurationError):
            config.with_run(n_shots=-1)


class TestLoadScenario:
    """Test reading scenario files."""

    @pytest.mark.parametrize("name", ["hbt", "hom_parallel", "hom_perpendicular", "postselect", "stationary", "tower_bridge"])
    def test_bundled_scenarios_valid(self, name):
        config = load_scenario(SCENARIOS / f"{name}.toml")
        assert config.run.n_shots >= 1

    def test_postselect_scenario_keeps_strict_threshold(self):
        config = load_scenario(SCENARIOS / "postselect.toml")
        assert config.run.target_overlap_fraction is None
        assert config.launch.atom_flux > load_scenario(SCENARIOS / "hbt.toml").launch.atom_flux
        assert max(config.analysis.selection_thresholds) == 7

    def test_hom_pair_differs_only_in_polarization(self):
        parallel = config_dict(load_scenario(SCENARIOS / "hom_parallel.toml"))
        perpendicular = config_dict(load_scenario(SCENARIOS / "hom_perpendicular.toml"))
        assert parallel["interferometer"]["polarization"] == "parallel"
        assert perpendicular["interferometer"]["polarization"] == "perpendicular"
        for section in ("system", "launch", "mode", "chain", "pulse"):
            assert parallel[section] == perpendicular[section]

    def test_malformed_toml(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("[run\nn_shots = 3\n")
        with pytest.raises(ConfigurationError):
            load_scenario(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_scenario(tmp_path / "absent.toml")


class TestConfigHash:
    """Test the run fingerprint."""

    def test_stable_and_short(self):
        first, second = build_scenario({}), build_scenario({})
        assert config_hash(first) == config_hash(second)
        assert len(config_hash(first)) == 16
        int(config_hash(first), 16)

    def test_changes_with_seed(self):
        config = build_scenario({})
        assert config_hash(config) != config_hash(config.with_run(rng_seed=1))

    def test_disabled_band_limit_serializable(self):
        config = build_scenario({"pulse": {"band_limit_hz": None}})
        assert config_dict(config)["pulse"]["band_limit_hz"] is None
        assert len(config_hash(config)) == 16


class TestRuntimeSettings:
    """Test CPS_* environment settings."""

    def test_defaults(self):
        settings = get_settings()
        assert settings.log_level == "INFO"
        assert settings.threads == 1

    def test_environment_override_and_cache(self, monkeypatch):
        monkeypatch.setenv("CPS_THREADS", "4")
        monkeypatch.setenv("CPS_JSON_LOGS", "true")
        settings = get_settings()
        assert settings.threads == 4
        assert settings.json_logs
        monkeypatch.setenv("CPS_THREADS", "2")
        assert get_settings() is settings
        reset_settings()
        assert get_settings().threads == 2
