"""
Latent factor model.

Regularized matrix factorization trained by per-observation SGD:

    minimize  sum over observed (r_ui - p_u . q_i)^2 + reg * (|p_u|^2 + |q_i|^2)

The same procedure fits the item embeddings of the difference-vector
generator (modules.mialab.diffvec.embeddings).
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from modules.mialab.core.exceptions import DivergenceError
from modules.mialab.core.logging import get_logger
from modules.mialab.data.dataset import RatingDataset
from modules.mialab.recommenders.base import RecommenderModel

logger = get_logger(__name__)

INIT_SCALE = 0.1
DIVERGENCE_FACTOR = 10.0


@dataclass(frozen=True)
class Factorization:
    user_factors: NDArray[np.float64]
    item_factors: NDArray[np.float64]
    rmse_trace: tuple[float, ...]

    @property
    def final_rmse(self) -> float:
        return self.rmse_trace[-1]


def training_rmse(
    ds: RatingDataset, user_factors: NDArray[np.float64], item_factors: NDArray[np.float64]
) -> float:
    predictions = np.einsum("ij,ij->i", user_factors[ds.users], item_factors[ds.items])
    return float(np.sqrt(np.mean((ds.ratings - predictions) ** 2)))


def factorize(
    ds: RatingDataset,
    dim: int,
    learning_rate: float,
    regularization: float,
    epochs: int,
    rng: np.random.Generator,
) -> Factorization:
    """
    Fit user and item factors; factors start at N(0, 0.1^2) and observations
    are visited in a fresh random order every epoch.

    Raises:
        ValueError: dim < 1, negative epochs or empty data.
        DivergenceError: RMSE turns non-finite or exceeds 10x its initial value.
    """
    if dim < 1:
        raise ValueError(f"embedding size must be at least 1, got {dim}")
    if epochs < 0:
        raise ValueError(f"epochs must be non-negative, got {epochs}")
    if len(ds) == 0:
        raise ValueError("cannot factorize an empty rating set")

    user_factors = rng.normal(0.0, INIT_SCALE, size=(ds.n_users, dim))
    item_factors = rng.normal(0.0, INIT_SCALE, size=(ds.n_items, dim))
    trace = [training_rmse(ds, user_factors, item_factors)]
    limit = DIVERGENCE_FACTOR * trace[0]

    for epoch in range(epochs):
        order = rng.permutation(len(ds))
        for u, i, r in zip(
            ds.users[order].tolist(), ds.items[order].tolist(), ds.ratings[order].tolist()
        ):
            pu = user_factors[u].copy()
            qi = item_factors[i].copy()
            err = r - pu @ qi
            user_factors[u] = pu + learning_rate * (err * qi - regularization * pu)
            item_factors[i] = qi + learning_rate * (err * pu - regularization * qi)

        rmse = training_rmse(ds, user_factors, item_factors)
        if not np.isfinite(rmse) or rmse > limit:
            raise DivergenceError(
                f"RMSE {rmse:.4g} after epoch {epoch + 1} exceeds {DIVERGENCE_FACTOR:g}x "
                f"the initial {trace[0]:.4g}"
            )
        trace.append(rmse)
        logger.debug("Factorization epoch", extra={"epoch": epoch + 1, "rmse": rmse})

    return Factorization(user_factors, item_factors, tuple(trace))


def train_lfm(
    train: RatingDataset,
    embed: int,
    learning_rate: float,
    regularization: float,
    epochs: int,
    seed: int,
) -> RecommenderModel:
    fit = factorize(train, embed, learning_rate, regularization, epochs, np.random.default_rng(seed))
    logger.info(
        "LFM fitted",
        extra={"embed": embed, "epochs": epochs, "rmse": fit.final_rmse, "interactions": len(train)},
    )
    return RecommenderModel(
        kind="lfm",
        train=train,
        user_factors=fit.user_factors,
        item_factors=fit.item_factors,
        rmse_trace=fit.rmse_trace,
    )
