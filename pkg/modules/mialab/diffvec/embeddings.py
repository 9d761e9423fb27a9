"""
Item embeddings for the difference-vector generator.

The extraction subset is factorized with the LFM procedure and only the
item factors are kept.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from modules.mialab.core.exceptions import CoverageError, ShapeMismatchError
from modules.mialab.core.logging import get_logger
from modules.mialab.data.dataset import RatingDataset
from modules.mialab.recommenders.lfm import factorize

logger = get_logger(__name__)


@dataclass(frozen=True)
class ItemEmbeddings:
    matrix: NDArray[np.float64]
    rmse_trace: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2 or self.matrix.shape[1] < 1:
            raise ShapeMismatchError(f"embedding matrix must be items x dim, got {self.matrix.shape}")
        if not np.all(np.isfinite(self.matrix)):
            raise ShapeMismatchError("embedding matrix has non-finite entries")

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def n_items(self) -> int:
        return int(self.matrix.shape[0])


def fit_item_embeddings(
    extraction: RatingDataset,
    dim: int,
    learning_rate: float,
    regularization: float,
    epochs: int,
    seed: int,
) -> ItemEmbeddings:
    """
    Raises:
        CoverageError: A catalog item has no interaction in the extraction subset.
        DivergenceError: Factorization diverged.
    """
    uncovered = np.flatnonzero(extraction.item_counts() == 0)
    if uncovered.size:
        raise CoverageError(
            f"{uncovered.size} catalog items have no extraction interactions "
            f"(first: {uncovered[:5].tolist()})"
        )
    fit = factorize(extraction, dim, learning_rate, regularization, epochs, np.random.default_rng(seed))
    logger.info(
        "Item embeddings fitted",
        extra={"items": extraction.n_items, "dim": dim, "rmse": fit.final_rmse},
    )
    return ItemEmbeddings(matrix=fit.item_factors, rmse_trace=fit.rmse_trace)
