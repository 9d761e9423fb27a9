"""
Root Pytest Fixtures.

Shared fixtures available to all test types.

The tiny profile shrinks every stage of the pipeline so an end-to-end run
on synthetic data finishes in seconds. Catalogs stay small enough that the
extraction users cover every item.
"""

from typing import Any

import pytest

from modules.mialab.core.config import get_app_config, get_settings, load_experiment_config
from modules.mialab.schemas.experiment import ExperimentConfig

TINY_PROFILE: dict[str, Any] = {
    "seed": 7,
    "setting": "SLSL",
    "repetitions": 1,
    "top_k": 5,
    "datasets.synthetic.n_users": 200,
    "datasets.synthetic.n_items": 30,
    "datasets.synthetic.n_latent": 3,
    "datasets.synthetic.density": 0.5,
    "datasets.synthetic_alt.n_users": 200,
    "datasets.synthetic_alt.n_items": 30,
    "datasets.synthetic_alt.n_latent": 3,
    "datasets.synthetic_alt.density": 0.5,
    "lfm.embed_size": 4,
    "lfm.epochs": 5,
    "generator.dim": 4,
    "generator.epochs": 5,
    "dlmia.d_inv": 2,
    "dlmia.m": 3,
    "dlmia.decoder_hidden": [8],
    "dlmia.attack_hidden": [8, 4],
    "dlmia.pretrain_epochs": 10,
    "dlmia.epoch_out": 2,
    "dlmia.epoch_in": 2,
}


@pytest.fixture
def clear_config_cache():
    """Clear lru_cache so each test gets a fresh configuration load."""
    get_settings.cache_clear()
    get_app_config.cache_clear()
    yield
    get_settings.cache_clear()
    get_app_config.cache_clear()


@pytest.fixture(scope="session")
def tiny_config_factory():
    """Factory for the tiny experiment profile with extra dotted-key overrides."""

    def _make(**overrides: Any) -> ExperimentConfig:
        merged = dict(TINY_PROFILE)
        merged.update({key.replace("__", "."): value for key, value in overrides.items()})
        return load_experiment_config(overrides=merged)

    return _make


@pytest.fixture
def tiny_config(tiny_config_factory) -> ExperimentConfig:
    return tiny_config_factory()


@pytest.fixture
def tiny_overrides_file(tmp_path):
    """The tiny profile written as a key-value override file."""
    lines = [f"{key} = {value}" for key, value in TINY_PROFILE.items()]
    path = tmp_path / "tiny.conf"
    path.write_text("# tiny synthetic profile\n" + "\n".join(lines) + "\n")
    return path

