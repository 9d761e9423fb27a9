"""
Dense multilayer perceptron with hand-derived backpropagation.

Parameters live in a flat name → array mapping so several networks can share
one parameter set under different prefixes ("decoder.", "attack.", ...):

    {prefix}layer{i}.weight   (fan_in, fan_out)
    {prefix}layer{i}.bias     (fan_out,)

Hidden layers use ReLU; the output head is either the identity or a
two-way softmax.
"""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator

from modules.mialab.core.exceptions import ShapeMismatchError, StaleCacheError
from modules.mialab.nn.layers import (
    Params,
    glorot_uniform,
    linear_backward,
    linear_forward,
    relu,
    relu_backward,
    softmax2,
    softmax2_backward,
)


class MlpSpec(BaseModel):
    """Layer widths (input, hidden..., output), activation and output head."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    layer_widths: list[int] = Field(min_length=3)
    activation: Literal["relu"] = "relu"
    output_head: Literal["softmax2", "identity"] = "identity"

    @field_validator("layer_widths")
    @classmethod
    def _positive_widths(cls, widths: list[int]) -> list[int]:
        if any(w < 1 for w in widths):
            raise ValueError(f"layer widths must be >= 1, got {widths}")
        return widths

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def input_width(self) -> int:
        return self.layer_widths[0]

    @property
    def output_width(self) -> int:
        return self.layer_widths[-1]

    def parameter_names(self, prefix: str = "") -> list[str]:
        names: list[str] = []
        for i in range(self.n_layers):
            names += [f"{prefix}layer{i}.weight", f"{prefix}layer{i}.bias"]
        return names


@dataclass
class MlpCache:
    """Everything mlp_backward needs from the matching forward call."""

    spec: MlpSpec
    prefix: str
    inputs: list[NDArray[np.float64]] = field(default_factory=list)
    pre_activations: list[NDArray[np.float64]] = field(default_factory=list)
    output: NDArray[np.float64] | None = None


def init_mlp(spec: MlpSpec, rng: np.random.Generator, prefix: str = "") -> Params:
    """Glorot-uniform weights, zero biases."""
    params: Params = {}
    for i, (fan_in, fan_out) in enumerate(zip(spec.layer_widths[:-1], spec.layer_widths[1:])):
        params[f"{prefix}layer{i}.weight"] = glorot_uniform(fan_in, fan_out, rng)
        params[f"{prefix}layer{i}.bias"] = np.zeros(fan_out)
    return params


def mlp_forward(
    spec: MlpSpec, params: Params, x: NDArray[np.float64], prefix: str = ""
) -> tuple[NDArray[np.float64], MlpCache]:
    """
    Batch forward pass.

    Raises:
        ShapeMismatchError: If x does not have spec.input_width columns.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_width:
        raise ShapeMismatchError(
            f"MLP expects input of width {spec.input_width}, got shape {x.shape}"
        )
    cache = MlpCache(spec=spec, prefix=prefix)
    h = x
    for i in range(spec.n_layers):
        cache.inputs.append(h)
        z = linear_forward(h, params[f"{prefix}layer{i}.weight"], params[f"{prefix}layer{i}.bias"])
        cache.pre_activations.append(z)
        h = relu(z) if i < spec.n_layers - 1 else z
    out = softmax2(h) if spec.output_head == "softmax2" else h
    cache.output = out
    return out, cache


def mlp_backward(
    spec: MlpSpec, params: Params, cache: MlpCache, upstream: NDArray[np.float64]
) -> tuple[Params, NDArray[np.float64]]:
    """
    Gradients of a scalar loss with respect to every weight, bias and the input.

    Args:
        upstream: d loss / d output, same shape as the forward output.

    Raises:
        StaleCacheError: If the cache belongs to another network or batch.
    """
    if cache.spec != spec or cache.output is None or upstream.shape != cache.output.shape:
        raise StaleCacheError(
            f"cache from a different forward call (upstream {upstream.shape}, "
            f"cached output {None if cache.output is None else cache.output.shape})"
        )
    prefix = cache.prefix
    g = softmax2_backward(cache.output, upstream) if spec.output_head == "softmax2" else upstream
    grads: Params = {}
    for i in reversed(range(spec.n_layers)):
        if i < spec.n_layers - 1:
            g = relu_backward(cache.pre_activations[i], g)
        weight = params[f"{prefix}layer{i}.weight"]
        if cache.inputs[i].shape[1] != weight.shape[0]:
            raise StaleCacheError(f"cached input does not match {prefix}layer{i}.weight")
        d_w, d_b, g = linear_backward(cache.inputs[i], weight, g)
        grads[f"{prefix}layer{i}.weight"] = d_w
        grads[f"{prefix}layer{i}.bias"] = d_b
    return grads, g
