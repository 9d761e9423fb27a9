"""
Layer primitives: affine maps, ReLU and the two-way softmax, each with its
backward pass. Weights are stored (fan_in, fan_out) so a batch x of shape
(n, fan_in) maps to x @ W + b.
"""

import math

import numpy as np
from numpy.typing import NDArray

from modules.mialab.core.exceptions import ShapeMismatchError

Params = dict[str, NDArray[np.float64]]


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Uniform in ±√(6 / (fan_in + fan_out))."""
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def linear_forward(
    x: NDArray[np.float64], weight: NDArray[np.float64], bias: NDArray[np.float64]
) -> NDArray[np.float64]:
    if x.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise ShapeMismatchError(
            f"input of shape {x.shape} does not fit weight of shape {weight.shape}"
        )
    return x @ weight + bias


def linear_backward(
    x: NDArray[np.float64], weight: NDArray[np.float64], upstream: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Returns (d weight, d bias, d input)."""
    return x.T @ upstream, upstream.sum(axis=0), upstream @ weight.T


def relu(z: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.maximum(z, 0.0)


def relu_backward(z: NDArray[np.float64], upstream: NDArray[np.float64]) -> NDArray[np.float64]:
    return upstream * (z > 0.0)


def softmax2(z: NDArray[np.float64]) -> NDArray[np.float64]:
    if z.ndim != 2 or z.shape[1] != 2:
        raise ShapeMismatchError(f"softmax2 expects (n, 2) logits, got {z.shape}")
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax2_backward(probs: NDArray[np.float64], upstream: NDArray[np.float64]) -> NDArray[np.float64]:
    """Vector-Jacobian product of softmax: p ⊙ (g - Σ g p)."""
    inner = (upstream * probs).sum(axis=1, keepdims=True)
    return probs * (upstream - inner)
