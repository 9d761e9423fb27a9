"""
Experiment Configuration Schema.

Typed, strictly validated experiment configuration. Defaults come from
config/settings/experiment.yaml; a run may overlay a key-value file and CLI
flags (see modules.mialab.core.config.load_experiment_config).

Setting notation:
    2 letters  <dataset><algorithm>                  shadow and target identical
    4 letters  <shadow dataset><shadow algorithm><target dataset><target algorithm>

    Datasets:   M MovieLens-1M, A Amazon CSV, S synthetic, T synthetic (alternate)
    Algorithms: I ItemBase, L LFM
"""

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DATASET_CODES: dict[str, str] = {
    "M": "movielens",
    "A": "amazon",
    "S": "synthetic",
    "T": "synthetic_alt",
}

ALGORITHM_CODES: dict[str, str] = {
    "I": "item_base",
    "L": "lfm",
}


class _StrictBase(BaseModel):
    """Base with extra='forbid' so unknown keys are caught immediately."""

    model_config = ConfigDict(extra="forbid")


class DefenseConfig(_StrictBase):
    enabled: bool
    pool_multiplier: int = Field(ge=1)
    max_pool_fraction: float = Field(gt=0.0, le=1.0)


class FileDatasetConfig(_StrictBase):
    path: str | None
    min_user_interactions: int = Field(ge=0)
    min_item_interactions: int = Field(ge=0)


class SyntheticDatasetConfig(_StrictBase):
    n_users: int = Field(ge=4)
    n_items: int = Field(ge=2)
    n_latent: int = Field(ge=1)
    density: float = Field(gt=0.0, le=1.0)
    seed_offset: int
    min_user_interactions: int = Field(ge=0)
    min_item_interactions: int = Field(ge=0)


class DatasetsConfig(_StrictBase):
    movielens: FileDatasetConfig
    amazon: FileDatasetConfig
    synthetic: SyntheticDatasetConfig
    synthetic_alt: SyntheticDatasetConfig


class SplitConfig(_StrictBase):
    shadow: float = Field(gt=0.0)
    target: float = Field(gt=0.0)
    extraction: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _fractions_sum_to_one(self) -> "SplitConfig":
        total = self.shadow + self.target + self.extraction
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {total}")
        return self

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.shadow, self.target, self.extraction)


class FactorizationConfig(_StrictBase):
    learning_rate: float = Field(gt=0.0)
    regularization: float = Field(ge=0.0)
    epochs: int = Field(ge=0)


class LfmConfig(FactorizationConfig):
    embed_size: int = Field(ge=1)


class GeneratorConfig(FactorizationConfig):
    dim: int = Field(ge=1)


class DlMiaConfig(_StrictBase):
    d_inv: int = Field(ge=1)
    m: int = Field(ge=3)
    decoder_hidden: list[int] = Field(min_length=1)
    attack_hidden: list[int] = Field(min_length=1)
    pretrain_epochs: int = Field(ge=0)
    epoch_out: int = Field(ge=0)
    epoch_in: int = Field(ge=0)
    encoder_learning_rate: float = Field(gt=0.0)
    attack_learning_rate: float = Field(gt=0.0)
    attack_momentum: float = Field(ge=0.0, lt=1.0)
    score_learning_rate: float = Field(gt=0.0, le=1.0)
    score_init_low: float = Field(gt=0.0)
    score_init_high: float = Field(gt=0.0)
    score_min: float = Field(gt=0.0)
    score_max: float = Field(gt=0.0)
    log_var_init: float
    kappa_init: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _score_ranges(self) -> "DlMiaConfig":
        if self.score_init_low > self.score_init_high:
            raise ValueError("score_init_low must not exceed score_init_high")
        if self.score_min >= self.score_max:
            raise ValueError("score_min must be below score_max")
        return self


class ExperimentConfig(_StrictBase):
    """Everything one experiment run depends on. A single seed drives all randomness."""

    seed: int
    setting: str
    repetitions: int = Field(ge=1)
    top_k: int = Field(ge=1)
    defense: DefenseConfig
    datasets: DatasetsConfig
    split: SplitConfig
    lfm: LfmConfig
    generator: GeneratorConfig
    dlmia: DlMiaConfig

    @field_validator("setting")
    @classmethod
    def _valid_setting(cls, value: str) -> str:
        code = value.strip().upper()
        if len(code) not in (2, 4):
            raise ValueError(f"setting must have 2 or 4 letters, got {value!r}")
        if len(code) == 2:
            code = code * 2
        for dataset_code in (code[0], code[2]):
            if dataset_code not in DATASET_CODES:
                raise ValueError(f"unknown dataset code {dataset_code!r} in setting {value!r}")
        for algorithm_code in (code[1], code[3]):
            if algorithm_code not in ALGORITHM_CODES:
                raise ValueError(f"unknown algorithm code {algorithm_code!r} in setting {value!r}")
        return code

    @property
    def shadow_dataset(self) -> str:
        return DATASET_CODES[self.setting[0]]

    @property
    def shadow_algorithm(self) -> str:
        return ALGORITHM_CODES[self.setting[1]]

    @property
    def target_dataset(self) -> str:
        return DATASET_CODES[self.setting[2]]

    @property
    def target_algorithm(self) -> str:
        return ALGORITHM_CODES[self.setting[3]]

    @property
    def dataset_codes(self) -> list[str]:
        """Distinct dataset codes used by the setting, shadow first."""
        return list(dict.fromkeys([self.setting[0], self.setting[2]]))
