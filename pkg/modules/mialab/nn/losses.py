"""
Losses with gradients.

Attack output rows are (member probability, non-member probability); label
1 means member.
"""

import numpy as np
from numpy.typing import ArrayLike, NDArray

from modules.mialab.core.exceptions import ShapeMismatchError

PROB_FLOOR = 1e-12


def _check_rows(probs: NDArray[np.float64], labels: NDArray[np.float64]) -> None:
    if probs.ndim != 2 or probs.shape[1] != 2:
        raise ShapeMismatchError(f"probabilities must be (n, 2), got {probs.shape}")
    if labels.shape != (probs.shape[0],):
        raise ShapeMismatchError(
            f"expected {probs.shape[0]} labels, got shape {labels.shape}"
        )


def bce_terms(probs: ArrayLike, labels: ArrayLike) -> NDArray[np.float64]:
    """Per-sample clamped binary cross-entropy -(y ln p₁ + (1 - y) ln p₂)."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    _check_rows(p, y)
    p1 = np.clip(p[:, 0], PROB_FLOOR, 1.0 - PROB_FLOOR)
    p2 = np.clip(p[:, 1], PROB_FLOOR, 1.0 - PROB_FLOOR)
    return -(y * np.log(p1) + (1.0 - y) * np.log(p2))


def bce_loss(
    probs: ArrayLike, labels: ArrayLike, weights: ArrayLike | None = None
) -> tuple[float, NDArray[np.float64]]:
    """
    Weighted binary cross-entropy summed over samples, and d loss / d probs.

    Entries clamped to the probability floor get zero gradient.

    Raises:
        ShapeMismatchError: On inconsistent shapes.
    """
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    _check_rows(p, y)
    w = np.ones(p.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != y.shape:
        raise ShapeMismatchError(f"expected {y.size} weights, got shape {w.shape}")

    terms = bce_terms(p, y)
    loss = float((w * terms).sum())

    grad = np.zeros_like(p)
    inside1 = (p[:, 0] > PROB_FLOOR) & (p[:, 0] < 1.0 - PROB_FLOOR)
    inside2 = (p[:, 1] > PROB_FLOOR) & (p[:, 1] < 1.0 - PROB_FLOOR)
    grad[inside1, 0] = -(w * y)[inside1] / p[inside1, 0]
    grad[inside2, 1] = -(w * (1.0 - y))[inside2] / p[inside2, 1]
    return loss, grad


def squared_error_rows(
    prediction: NDArray[np.float64], target: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Per-row ½‖prediction - target‖² and its gradient w.r.t. prediction."""
    if prediction.shape != target.shape:
        raise ShapeMismatchError(
            f"prediction {prediction.shape} and target {target.shape} differ"
        )
    residual = prediction - target
    return 0.5 * (residual * residual).sum(axis=1), residual
