"""
Recommender model and recommendation set types.

A fitted model is immutable: scoring never mutates it, so one model can
serve every user of a run. The training interactions travel with the model
because both ranking (history exclusion) and ItemBase scoring need them.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from scipy import sparse

from modules.mialab.core.exceptions import ShapeMismatchError
from modules.mialab.data.dataset import RatingDataset

RecommenderKind = Literal["item_base", "lfm"]
RecommendationSource = Literal["model", "popularity", "popularity_randomized"]
SOURCES: tuple[str, ...] = ("model", "popularity", "popularity_randomized")


@dataclass(frozen=True)
class RecommendationSet:
    user_id: int
    items: NDArray[np.int64]
    source: RecommendationSource

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ValueError(f"unknown recommendation source {self.source!r}")
        if np.unique(self.items).size != self.items.size:
            raise ValueError(f"recommendations for user {self.user_id} repeat an item")

    def __len__(self) -> int:
        return int(self.items.size)


@dataclass(frozen=True)
class RecommenderModel:
    """
    A fitted ItemBase or LFM recommender.

    Attributes:
        kind: "item_base" or "lfm".
        train: The interactions the model was fitted on (member users only).
        similarity: item × item cosine matrix (item_base).
        user_factors: n_users × embed matrix (lfm).
        item_factors: n_items × embed matrix (lfm).
        rmse_trace: Training RMSE before the first epoch and after each epoch (lfm).
    """

    kind: RecommenderKind
    train: RatingDataset
    similarity: NDArray[np.float64] | None = None
    user_factors: NDArray[np.float64] | None = None
    item_factors: NDArray[np.float64] | None = None
    rmse_trace: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        n_items = self.train.n_items
        if self.kind == "item_base":
            if self.similarity is None or self.similarity.shape != (n_items, n_items):
                raise ShapeMismatchError(f"item_base needs a {n_items}x{n_items} similarity matrix")
        elif self.kind == "lfm":
            if self.user_factors is None or self.item_factors is None:
                raise ShapeMismatchError("lfm needs user and item factors")
            if self.user_factors.shape[0] != self.train.n_users or self.item_factors.shape[0] != n_items:
                raise ShapeMismatchError("factor rows must cover the id ranges")
            if self.user_factors.shape[1] != self.item_factors.shape[1]:
                raise ShapeMismatchError("user and item factors disagree on the embedding size")
        else:
            raise ValueError(f"unknown recommender kind {self.kind!r}")

    @property
    def n_items(self) -> int:
        return self.train.n_items

    @cached_property
    def training_users(self) -> NDArray[np.int64]:
        return self.train.user_ids()

    @cached_property
    def _ratings(self) -> sparse.csr_matrix:
        return self.train.rating_matrix()

    @cached_property
    def histories(self) -> dict[int, NDArray[np.int64]]:
        return self.train.histories()

    def history(self, user: int) -> NDArray[np.int64]:
        """Sorted training items of a user; raises ValueError for users outside the training set."""
        try:
            return self.histories[int(user)]
        except KeyError:
            raise ValueError(f"user {user} is not in the {self.kind} training set") from None

    def score_matrix(self, users: NDArray[np.int64]) -> NDArray[np.float64]:
        """len(users) × n_items predicted scores."""
        users = np.asarray(users, dtype=np.int64)
        if self.kind == "item_base":
            ratings = self._ratings[users]
            return np.asarray(ratings @ self.similarity)
        return self.user_factors[users] @ self.item_factors.T

    def scores(self, user: int) -> NDArray[np.float64]:
        return self.score_matrix(np.array([user]))[0]
