"""
Unit Tests for Configuration Management.

Black box tests against the public interface of config.py.
Tests run against the real project files (YAML configs).
Failure scenarios use tmp_path to create controlled filesystems.
"""

import pytest

from modules.mialab.core.config import (
    AppConfig,
    Settings,
    find_project_root,
    get_app_config,
    get_settings,
    load_experiment_config,
    load_yaml_config,
    parse_key_value_file,
    resolve_output_dir,
    validate_project_root,
)
from modules.mialab.core.config_schema import FeaturesSchema, LoggingSchema
from modules.mialab.core.exceptions import ConfigurationError
from modules.mialab.schemas.experiment import ExperimentConfig


def load_yaml_config_text(filename: str) -> str:
    return (find_project_root() / "config" / "settings" / filename).read_text()


@pytest.fixture(autouse=True)
def _fresh_config(clear_config_cache):
    yield


# =============================================================================
# Project root
# =============================================================================


class TestFindProjectRoot:
    """Tests for .project_root marker discovery."""

    def test_finds_root_from_project_directory(self):
        root = find_project_root()
        assert (root / ".project_root").exists()
        assert (root / "config" / "settings").is_dir()

    def test_raises_when_no_marker_file(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        with pytest.raises(RuntimeError, match="Project root not found"):
            find_project_root()

    def test_validate_exits_when_marker_missing(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        with pytest.raises(SystemExit):
            validate_project_root()


# =============================================================================
# YAML files
# =============================================================================


class TestLoadYamlConfig:
    """Tests for YAML file loading from config/settings/."""

    def test_loads_all_config_files(self):
        """Every expected YAML file should be loadable and non-empty."""
        for filename in ("application.yaml", "logging.yaml", "features.yaml", "concurrency.yaml", "experiment.yaml"):
            data = load_yaml_config(filename)
            assert isinstance(data, dict) and data, filename

    def test_raises_for_nonexistent_file(self):
        with pytest.raises(FileNotFoundError, match="Configuration file not found"):
            load_yaml_config("does_not_exist.yaml")

    def test_invalid_file_names_the_file(self, tmp_path, monkeypatch):
        """A schema violation should fail at load with the offending file name."""
        settings_dir = tmp_path / "config" / "settings"
        settings_dir.mkdir(parents=True)
        (tmp_path / ".project_root").touch()
        for filename in ("application.yaml", "logging.yaml", "features.yaml", "concurrency.yaml", "experiment.yaml"):
            (settings_dir / filename).write_text(load_yaml_config_text(filename))
        (settings_dir / "features.yaml").write_text("artifacts_metrics_enabled: true\nunknown_flag: 1\n")
        monkeypatch.chdir(tmp_path)

        with pytest.raises(ValueError, match="Invalid configuration in features.yaml"):
            AppConfig()


class TestAppConfig:
    """Tests for the typed configuration sections."""

    def test_sections_are_typed(self):
        config = get_app_config()
        assert isinstance(config.logging, LoggingSchema)
        assert isinstance(config.features, FeaturesSchema)
        assert isinstance(config.experiment, ExperimentConfig)
        assert config.concurrency.process_pool.max_workers >= 1

    def test_is_cached(self):
        assert get_app_config() is get_app_config()


class TestSettings:
    """Tests for MIALAB_* machine paths."""

    def test_fields_default_to_none(self, monkeypatch):
        for name in ("MIALAB_MOVIELENS_PATH", "MIALAB_AMAZON_PATH", "MIALAB_OUTPUT_DIR"):
            monkeypatch.delenv(name, raising=False)
        settings = Settings()
        assert settings.movielens_path is None
        assert settings.output_dir is None

    def test_reads_prefixed_environment(self, monkeypatch):
        monkeypatch.setenv("MIALAB_MOVIELENS_PATH", "/data/ml-1m/ratings.dat")
        assert get_settings().movielens_path == "/data/ml-1m/ratings.dat"


# =============================================================================
# Experiment configuration
# =============================================================================


class TestParseKeyValueFile:
    """Tests for the plain-text override format."""

    def test_parses_scalars_lists_and_comments(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text(
            "# comment line\n"
            "seed = 11\n"
            "\n"
            "defense.enabled = true   # inline comment\n"
            "dlmia.attack_hidden = [16, 4]\n"
            "dlmia.encoder_learning_rate = 0.005\n"
            "setting = SISL\n"
        )

        overrides = parse_key_value_file(path)

        assert overrides == {
            "seed": 11,
            "defense.enabled": True,
            "dlmia.attack_hidden": [16, 4],
            "dlmia.encoder_learning_rate": 0.005,
            "setting": "SISL",
        }

    def test_line_without_equals_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("seed = 1\njust words\n")
        with pytest.raises(ConfigurationError, match=":2:"):
            parse_key_value_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="Cannot read config file"):
            parse_key_value_file(tmp_path / "absent.conf")


class TestLoadExperimentConfig:
    """Tests for YAML defaults overlaid by a file and flags."""

    def test_defaults_match_yaml(self):
        config = load_experiment_config()
        defaults = get_app_config().experiment
        assert config.seed == defaults.seed
        assert config.dlmia == defaults.dlmia
        assert config.split == defaults.split

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("seed = 11\ntop_k = 10\n")

        config = load_experiment_config(path, {"seed": 99, "setting": None})

        assert config.seed == 99
        assert config.top_k == 10

    def test_two_letter_setting_expands(self):
        config = load_experiment_config(overrides={"setting": "sl"})
        assert config.setting == "SLSL"
        assert (config.shadow_dataset, config.shadow_algorithm) == ("synthetic", "lfm")

    def test_cross_setting(self):
        config = load_experiment_config(overrides={"setting": "SITL"})
        assert config.shadow_algorithm == "item_base"
        assert config.target_dataset == "synthetic_alt"
        assert config.target_algorithm == "lfm"

    @pytest.mark.parametrize("setting", ["SX", "XLSL", "SLS", "SLSLS"])
    def test_unknown_codes_rejected(self, setting):
        with pytest.raises(ConfigurationError, match="Invalid experiment configuration"):
            load_experiment_config(overrides={"setting": setting})

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError, match="Unknown configuration key: dlmia.depth"):
            load_experiment_config(overrides={"dlmia.depth": 3})

    def test_invalid_value_rejected(self):
        with pytest.raises(ConfigurationError):
            load_experiment_config(overrides={"dlmia.score_learning_rate": 1.5})

    def test_dataset_path_from_settings(self, monkeypatch):
        monkeypatch.setenv("MIALAB_AMAZON_PATH", "/data/amazon.csv")
        assert load_experiment_config().datasets.amazon.path == "/data/amazon.csv"


class TestResolveOutputDir:
    """Tests for output directory precedence."""

    def test_flag_wins(self, tmp_path):
        assert resolve_output_dir(tmp_path / "x") == tmp_path / "x"

    def test_environment_then_yaml(self, monkeypatch):
        monkeypatch.setenv("MIALAB_OUTPUT_DIR", "/scratch/runs")
        assert str(resolve_output_dir(None)) == "/scratch/runs"

    def test_falls_back_to_application_yaml(self, monkeypatch):
        monkeypatch.delenv("MIALAB_OUTPUT_DIR", raising=False)
        expected = find_project_root() / get_app_config().application.paths.output_dir
        assert resolve_output_dir(None) == expected
