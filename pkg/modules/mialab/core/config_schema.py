"""
Configuration Schemas.

Pydantic models defining the expected structure of each YAML config file.
Used by AppConfig to validate configuration at load time. If a YAML file
has missing keys, wrong types, or unknown fields, a clear ValidationError
is raised at startup instead of a cryptic KeyError deep in a training loop.

Each top-level class corresponds to one file in config/settings/:
    ApplicationSchema  → application.yaml
    LoggingSchema      → logging.yaml
    FeaturesSchema     → features.yaml
    ConcurrencySchema  → concurrency.yaml
    ExperimentConfig   → experiment.yaml (lives in modules.mialab.schemas.experiment)
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class _StrictBase(BaseModel):
    """Base with extra='forbid' so unknown YAML keys are caught immediately."""

    model_config = ConfigDict(extra="forbid")


# =============================================================================
# application.yaml
# =============================================================================


class PathsSchema(_StrictBase):
    data_dir: str
    output_dir: str


class ApplicationSchema(_StrictBase):
    name: str
    version: str
    description: str
    paths: PathsSchema


# =============================================================================
# logging.yaml
# =============================================================================


class ConsoleHandlerSchema(_StrictBase):
    enabled: bool


class FileHandlerSchema(_StrictBase):
    enabled: bool
    path: str
    max_bytes: int = Field(gt=0)
    backup_count: int = Field(ge=0)


class LoggingHandlersSchema(_StrictBase):
    console: ConsoleHandlerSchema
    file: FileHandlerSchema


class LoggingSchema(_StrictBase):
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
    format: Literal["json", "console"]
    handlers: LoggingHandlersSchema


# =============================================================================
# features.yaml
# =============================================================================


class FeaturesSchema(_StrictBase):
    artifacts_metrics_enabled: bool
    artifacts_datasets_enabled: bool
    artifacts_recommendations_enabled: bool
    artifacts_embeddings_enabled: bool
    artifacts_attack_vectors_enabled: bool
    artifacts_latents_enabled: bool
    artifacts_checkpoints_enabled: bool


# =============================================================================
# concurrency.yaml
# =============================================================================


class ProcessPoolSchema(_StrictBase):
    max_workers: int = Field(ge=1)


class ConcurrencySchema(_StrictBase):
    process_pool: ProcessPoolSchema
