"""
Optimizers.

Functional updates over named parameter sets: optimizer_step returns new
parameter and state mappings and never mutates its inputs, so a training
loop is a pure function of its seed and configuration.

    sgd_momentum   v ← μv - ηg;  θ ← θ + v
    adam           bias-corrected first / second moments
"""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from modules.mialab.core.exceptions import ShapeMismatchError
from modules.mialab.nn.layers import Params


class OptimizerSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["sgd_momentum", "adam"]
    learning_rate: float = Field(gt=0.0)
    momentum: float = Field(default=0.0, ge=0.0, lt=1.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)


@dataclass
class OptimizerState:
    step: int = 0
    first: dict[str, NDArray[np.float64]] = field(default_factory=dict)
    second: dict[str, NDArray[np.float64]] = field(default_factory=dict)


def optimizer_step(
    spec: OptimizerSpec,
    params: Params,
    grads: Params,
    state: OptimizerState | None = None,
) -> tuple[Params, OptimizerState]:
    """
    One update of every parameter that has a gradient.

    Parameters without a gradient are carried over unchanged.

    Raises:
        ShapeMismatchError: Gradient for an unknown parameter or of the wrong shape.
    """
    state = state or OptimizerState()
    new_params = dict(params)
    new_first = dict(state.first)
    new_second = dict(state.second)
    step = state.step + 1

    for name, grad in grads.items():
        if name not in params:
            raise ShapeMismatchError(f"gradient for unknown parameter {name!r}")
        theta = params[name]
        if grad.shape != theta.shape:
            raise ShapeMismatchError(
                f"gradient {name!r} has shape {grad.shape}, parameter has {theta.shape}"
            )
        if spec.kind == "sgd_momentum":
            velocity = spec.momentum * new_first.get(name, np.zeros_like(theta)) - spec.learning_rate * grad
            new_first[name] = velocity
            new_params[name] = theta + velocity
        else:
            m = spec.beta1 * new_first.get(name, np.zeros_like(theta)) + (1.0 - spec.beta1) * grad
            v = spec.beta2 * new_second.get(name, np.zeros_like(theta)) + (1.0 - spec.beta2) * grad * grad
            new_first[name] = m
            new_second[name] = v
            m_hat = m / (1.0 - spec.beta1**step)
            v_hat = v / (1.0 - spec.beta2**step)
            new_params[name] = theta - spec.learning_rate * m_hat / (np.sqrt(v_hat) + spec.epsilon)

    return new_params, OptimizerState(step=step, first=new_first, second=new_second)
