"""
Trainable state of the attack.

Parameter names (one flat mapping, see modules.mialab.nn.mlp):

    encoder.gaussian.weight / .bias   diff -> [mu | log_var]        (D, 2 d_inv)
    encoder.vmf.weight / .bias        diff -> [direction | rho]     (D, m + 1)
    decoder.layer{i}.*                [f_inv; f_spe] -> diff
    attack.layer{i}.*                 [f_inv; f_spe] -> (member, non-member)
    score_map.weight / .bias          truth-level score p -> weight w

In identity mode the encoder is skipped: the attack reads the difference
vector itself and only attack.* exists. That is the biased baseline.
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from modules.mialab.core.exceptions import CheckpointError, ShapeMismatchError
from modules.mialab.diffvec.vectors import AttackSample
from modules.mialab.nn.checkpoint import load_checkpoint, save_checkpoint
from modules.mialab.nn.layers import Params, glorot_uniform
from modules.mialab.nn.mlp import MlpSpec, init_mlp
from modules.mialab.schemas.experiment import DlMiaConfig

EncoderMode = Literal["disentangled", "identity"]


class DlMiaSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    input_dim: int = Field(ge=1)
    d_inv: int = Field(ge=1)
    m: int = Field(ge=3)
    decoder_hidden: tuple[int, ...] = (128, 128, 128)
    attack_hidden: tuple[int, ...] = (32, 8)
    mode: EncoderMode = "disentangled"

    @classmethod
    def from_config(cls, config: DlMiaConfig, input_dim: int, mode: EncoderMode = "disentangled") -> "DlMiaSpec":
        return cls(
            input_dim=input_dim,
            d_inv=config.d_inv,
            m=config.m,
            decoder_hidden=tuple(config.decoder_hidden),
            attack_hidden=tuple(config.attack_hidden),
            mode=mode,
        )

    @property
    def identity(self) -> bool:
        return self.mode == "identity"

    @property
    def feature_dim(self) -> int:
        """Width of f_dis = [f_inv; f_spe], or of the raw diff in identity mode."""
        return self.input_dim if self.identity else self.d_inv + self.m

    @property
    def decoder(self) -> MlpSpec:
        return MlpSpec(layer_widths=[self.feature_dim, *self.decoder_hidden, self.input_dim])

    @property
    def attack(self) -> MlpSpec:
        return MlpSpec(layer_widths=[self.feature_dim, *self.attack_hidden, 2], output_head="softmax2")


@dataclass(frozen=True)
class DlMiaState:
    spec: DlMiaSpec
    params: Params
    shadow_scores: NDArray[np.float64]
    target_scores: NDArray[np.float64]

    def with_params(self, params: Params) -> "DlMiaState":
        return replace(self, params=params)

    def with_scores(self, shadow: NDArray[np.float64], target: NDArray[np.float64]) -> "DlMiaState":
        return replace(self, shadow_scores=shadow, target_scores=target)


@dataclass(frozen=True)
class AttackInputs:
    """Matrices the training loops work on; target labels are never part of it."""

    shadow: NDArray[np.float64]
    shadow_labels: NDArray[np.int64]
    target: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.shadow.ndim != 2 or self.target.ndim != 2 or self.shadow.shape[1] != self.target.shape[1]:
            raise ShapeMismatchError(
                f"shadow {self.shadow.shape} and target {self.target.shape} must share a width"
            )
        if self.shadow_labels.shape != (self.shadow.shape[0],):
            raise ShapeMismatchError("one label per shadow sample required")

    @property
    def input_dim(self) -> int:
        return int(self.shadow.shape[1])

    @classmethod
    def from_samples(cls, shadow: list[AttackSample], target: list[AttackSample]) -> "AttackInputs":
        return cls(
            shadow=np.vstack([s.diff for s in shadow]),
            shadow_labels=np.array([s.label for s in shadow], dtype=np.int64),
            target=np.vstack([s.diff for s in target]),
        )


def inverse_softplus(value: float) -> float:
    """x with softplus(x) = value, stable for large values."""
    if value <= 0.0:
        raise ValueError(f"softplus is positive, got {value}")
    return float(value + np.log(-np.expm1(-value)))


def init_state(
    spec: DlMiaSpec,
    n_shadow: int,
    n_target: int,
    rng: np.random.Generator,
    score_range: tuple[float, float] = (0.9, 1.1),
    *,
    log_var_init: float = 0.0,
    kappa_init: float | None = None,
) -> DlMiaState:
    """
    Glorot-initialized networks, identity score map (w = p) and truth-level
    scores uniform in score_range.

    The encoder head biases start at zero unless log_var_init (every log
    variance) or kappa_init (the vMF concentration) is given; the weights
    are drawn either way.

    Draw order: attack, encoder heads, decoder, scores. The attack comes
    first so an identity-mode state starts from the same attack weights as
    a plain MLP initialized from the same generator.
    """
    params: Params = init_mlp(spec.attack, rng, prefix="attack.")
    if not spec.identity:
        params["encoder.gaussian.weight"] = glorot_uniform(spec.input_dim, 2 * spec.d_inv, rng)
        gaussian_bias = np.zeros(2 * spec.d_inv)
        gaussian_bias[spec.d_inv:] = log_var_init
        params["encoder.gaussian.bias"] = gaussian_bias
        params["encoder.vmf.weight"] = glorot_uniform(spec.input_dim, spec.m + 1, rng)
        vmf_bias = np.zeros(spec.m + 1)
        if kappa_init is not None:
            vmf_bias[-1] = inverse_softplus(kappa_init)
        params["encoder.vmf.bias"] = vmf_bias
        params.update(init_mlp(spec.decoder, rng, prefix="decoder."))
    params["score_map.weight"] = np.ones(1)
    params["score_map.bias"] = np.zeros(1)
    low, high = score_range
    return DlMiaState(
        spec=spec,
        params=params,
        shadow_scores=rng.uniform(low, high, size=n_shadow),
        target_scores=rng.uniform(low, high, size=n_target),
    )


def save_state(state: DlMiaState, path: str | Path) -> Path:
    tensors = dict(state.params)
    tensors["scores.shadow"] = state.shadow_scores
    tensors["scores.target"] = state.target_scores
    return save_checkpoint(path, tensors, {"spec": state.spec.model_dump(mode="json")})


def load_state(path: str | Path) -> DlMiaState:
    """
    Raises:
        CheckpointError: Not a DL-MIA checkpoint.
    """
    tensors, metadata = load_checkpoint(path)
    if "spec" not in metadata or "scores.shadow" not in tensors or "scores.target" not in tensors:
        raise CheckpointError(f"{path} is not a DL-MIA state checkpoint")
    shadow = tensors.pop("scores.shadow")
    target = tensors.pop("scores.target")
    return DlMiaState(spec=DlMiaSpec(**metadata["spec"]), params=tensors, shadow_scores=shadow, target_scores=target)
