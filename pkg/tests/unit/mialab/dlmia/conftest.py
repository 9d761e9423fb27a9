"""Fixtures shared by DL-MIA tests: a tiny toy state and a separable fixture."""

import numpy as np
import pytest

from modules.mialab.dlmia.encoder import encode
from modules.mialab.dlmia.objectives import ObjectiveNoise
from modules.mialab.dlmia.state import AttackInputs, DlMiaSpec, init_state
from modules.mialab.schemas.experiment import DlMiaConfig


def make_config(**overrides) -> DlMiaConfig:
    values = {
        "d_inv": 2,
        "m": 3,
        "decoder_hidden": [16],
        "attack_hidden": [8, 4],
        "pretrain_epochs": 200,
        "epoch_out": 3,
        "epoch_in": 5,
        "encoder_learning_rate": 0.001,
        "attack_learning_rate": 0.05,
        "attack_momentum": 0.7,
        "score_learning_rate": 0.2,
        "score_init_low": 0.9,
        "score_init_high": 1.1,
        "score_min": 0.001,
        "score_max": 1000.0,
        "log_var_init": -4.0,
        "kappa_init": 100.0,
    }
    values.update(overrides)
    return DlMiaConfig(**values)


@pytest.fixture
def toy_spec() -> DlMiaSpec:
    return DlMiaSpec(input_dim=3, d_inv=2, m=3, decoder_hidden=(4,), attack_hidden=(4,))


@pytest.fixture
def toy_inputs() -> AttackInputs:
    rng = np.random.default_rng(5)
    return AttackInputs(
        shadow=rng.normal(size=(4, 3)),
        shadow_labels=np.array([1, 0, 1, 0]),
        target=rng.normal(size=(3, 3)),
    )


@pytest.fixture
def toy_state(toy_spec, toy_inputs):
    return init_state(toy_spec, n_shadow=4, n_target=3, rng=np.random.default_rng(0))


@pytest.fixture
def frozen_noise(toy_state, toy_inputs) -> ObjectiveNoise:
    """Sampler noise drawn once, so the objective is a deterministic function of the parameters."""
    rng = np.random.default_rng(9)
    return ObjectiveNoise(
        shadow=encode(toy_state, toy_inputs.shadow, rng=rng).noise,
        target=encode(toy_state, toy_inputs.target, rng=rng).noise,
    )


def separable_inputs(seed: int, n: int = 40, dim: int = 4) -> tuple[AttackInputs, np.ndarray]:
    """Members around -1, non-members around +1 in every coordinate; target labels returned apart."""
    rng = np.random.default_rng(seed)
    labels = np.tile([1, 0], n // 2)

    def draw(y: np.ndarray) -> np.ndarray:
        centers = np.where(y[:, None] == 1, -1.0, 1.0)
        return centers + 0.3 * rng.standard_normal((y.size, dim))

    target_labels = np.tile([1, 0], n // 2)
    inputs = AttackInputs(shadow=draw(labels), shadow_labels=labels, target=draw(target_labels))
    return inputs, target_labels


@pytest.fixture
def separable():
    return separable_inputs(seed=21)


@pytest.fixture
def config_factory():
    return make_config


@pytest.fixture
def separable_factory():
    return separable_inputs
