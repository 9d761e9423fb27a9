"""
Configuration Management.

Loads machine-specific paths from config/.env and settings from
config/settings/*.yaml. Hyperparameters are never hardcoded in code paths.

Secrets / machine paths (.env, all optional):
    MIALAB_MOVIELENS_PATH, MIALAB_AMAZON_PATH, MIALAB_OUTPUT_DIR

Settings (YAML):
    application.yaml   - Project identity, default directories
    logging.yaml       - Logging configuration
    features.yaml      - Artifact toggles
    concurrency.yaml   - Process pool for parallel repetitions
    experiment.yaml    - Experiment defaults (every pipeline hyperparameter)

Experiment overrides:
    A plain-text key-value file, one `dotted.key = value` per line. Blank lines
    and `#` comments are ignored; values are parsed as YAML scalars, so
    `true`, `0.01`, `[32, 8]` and `null` all work.
"""

import copy
from functools import lru_cache
from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from modules.mialab.core.config_schema import (
    ApplicationSchema,
    ConcurrencySchema,
    FeaturesSchema,
    LoggingSchema,
)
from modules.mialab.core.exceptions import ConfigurationError
from modules.mialab.schemas.experiment import ExperimentConfig


def find_project_root() -> Path:
    """Find project root by looking for .project_root marker file."""
    current = Path.cwd()
    while current != current.parent:
        if (current / ".project_root").exists():
            return current
        current = current.parent
    raise RuntimeError("Project root not found. Ensure .project_root file exists.")


def validate_project_root() -> Path:
    """
    Validate that the project root can be found.

    Raises SystemExit with a clear message if .project_root is not found.
    Use this in entry scripts before any configuration loading.
    """
    try:
        return find_project_root()
    except RuntimeError as e:
        raise SystemExit(f"Error: {e}") from e


def load_yaml_config(filename: str) -> dict[str, Any]:
    """Load a YAML configuration file from config/settings/."""
    project_root = find_project_root()
    config_path = project_root / "config" / "settings" / filename

    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    with open(config_path) as f:
        return yaml.safe_load(f) or {}


class Settings(BaseSettings):
    """Machine-specific paths loaded from config/.env. Every field is optional."""

    movielens_path: str | None = None
    amazon_path: str | None = None
    output_dir: str | None = None

    model_config = SettingsConfigDict(
        env_prefix="MIALAB_",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


def _load_validated(schema_cls: type, filename: str) -> Any:
    """Load YAML and validate against schema. Returns typed model instance."""
    raw = load_yaml_config(filename)
    try:
        return schema_cls(**raw)
    except ValidationError as e:
        raise ValueError(
            f"Invalid configuration in {filename}:\n{e}"
        ) from e


class AppConfig:
    """
    Application configuration loaded from YAML files.

    Each YAML file is validated against its Pydantic schema at load time.
    Properties return typed Pydantic model instances with attribute access.
    """

    def __init__(self) -> None:
        self._application = _load_validated(ApplicationSchema, "application.yaml")
        self._logging = _load_validated(LoggingSchema, "logging.yaml")
        self._features = _load_validated(FeaturesSchema, "features.yaml")
        self._concurrency = _load_validated(ConcurrencySchema, "concurrency.yaml")
        self._experiment = _load_validated(ExperimentConfig, "experiment.yaml")

    @property
    def application(self) -> ApplicationSchema:
        """Application settings."""
        return self._application

    @property
    def logging(self) -> LoggingSchema:
        """Logging settings."""
        return self._logging

    @property
    def features(self) -> FeaturesSchema:
        """Artifact toggles."""
        return self._features

    @property
    def concurrency(self) -> ConcurrencySchema:
        """Process pool settings."""
        return self._concurrency

    @property
    def experiment(self) -> ExperimentConfig:
        """Experiment defaults."""
        return self._experiment


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance. Resolves .env path from project root."""
    env_path = find_project_root() / "config" / ".env"
    return Settings(_env_file=str(env_path) if env_path.exists() else None)


@lru_cache
def get_app_config() -> AppConfig:
    """Get cached application configuration."""
    return AppConfig()


def parse_key_value_file(path: str | Path) -> dict[str, Any]:
    """
    Parse a `dotted.key = value` override file into a flat mapping.

    Raises:
        ConfigurationError: On unreadable files or lines without '='.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}") from e

    overrides: dict[str, Any] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {raw_line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{path}:{lineno}: empty key")
        try:
            overrides[key] = yaml.safe_load(value) if value else None
        except yaml.YAMLError as e:
            raise ConfigurationError(f"{path}:{lineno}: cannot parse value {value!r}") from e
    return overrides


def _apply_override(tree: dict[str, Any], dotted_key: str, value: Any) -> None:
    parts = dotted_key.split(".")
    node = tree
    for part in parts[:-1]:
        child = node.get(part)
        if not isinstance(child, dict):
            raise ConfigurationError(f"Unknown configuration key: {dotted_key}")
        node = child
    if parts[-1] not in node:
        raise ConfigurationError(f"Unknown configuration key: {dotted_key}")
    node[parts[-1]] = value


def load_experiment_config(
    config_file: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> ExperimentConfig:
    """
    Build an ExperimentConfig from experiment.yaml, an optional key-value
    file and explicit overrides (CLI flags), in that order of precedence.

    Dataset paths left null in YAML are filled from MIALAB_* settings.

    Raises:
        ConfigurationError: Unknown keys or values failing validation.
    """
    tree = copy.deepcopy(get_app_config().experiment.model_dump())

    settings = get_settings()
    if tree["datasets"]["movielens"]["path"] is None:
        tree["datasets"]["movielens"]["path"] = settings.movielens_path
    if tree["datasets"]["amazon"]["path"] is None:
        tree["datasets"]["amazon"]["path"] = settings.amazon_path

    merged: dict[str, Any] = {}
    if config_file is not None:
        merged.update(parse_key_value_file(config_file))
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})

    for key, value in merged.items():
        _apply_override(tree, key, value)

    try:
        return ExperimentConfig(**tree)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid experiment configuration:\n{e}") from e


def resolve_output_dir(out_dir: str | Path | None) -> Path:
    """Resolve the experiment output directory: flag, then .env, then application.yaml."""
    if out_dir is not None:
        return Path(out_dir)
    configured = get_settings().output_dir
    if configured:
        return Path(configured)
    return find_project_root() / get_app_config().application.paths.output_dir
