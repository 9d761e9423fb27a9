"""
Recommendation protocol.

Members get the model's top-k unseen items; non-members get the most
popular unseen items of the model's training data, or, with the popularity
randomization defense, k items drawn uniformly from a larger popular pool.
Every ordering breaks ties by ascending item id.
"""

import numpy as np
from numpy.typing import NDArray

from modules.mialab.core.exceptions import InsufficientCatalogError
from modules.mialab.data.dataset import RatingDataset
from modules.mialab.recommenders.base import RecommendationSet, RecommenderModel


def _rank_candidates(
    values: NDArray[np.float64], history: NDArray[np.int64], k: int, user: int | None
) -> NDArray[np.int64]:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    mask = np.ones(values.shape[0], dtype=bool)
    mask[history] = False
    candidates = np.flatnonzero(mask)
    if candidates.size < k:
        raise InsufficientCatalogError(
            f"user {user} has {candidates.size} candidate items, fewer than k={k}"
        )
    order = np.lexsort((candidates, -values[candidates]))
    return candidates[order]


def recommend_top_k(model: RecommenderModel, user: int, k: int) -> RecommendationSet:
    """
    The k highest-scoring items outside the user's training history.

    Raises:
        ValueError: User is not in the model's training set.
        InsufficientCatalogError: Fewer than k unseen items.
    """
    history = model.history(user)
    ranked = _rank_candidates(model.scores(user), history, k, user)
    return RecommendationSet(user_id=int(user), items=ranked[:k], source="model")


def recommend_top_k_many(
    model: RecommenderModel, users: NDArray[np.int64], k: int
) -> list[RecommendationSet]:
    """recommend_top_k for many users, scoring them in one matrix product."""
    users = np.asarray(users, dtype=np.int64)
    for user in users:
        model.history(user)
    scores = model.score_matrix(users)
    return [
        RecommendationSet(
            user_id=int(user),
            items=_rank_candidates(row, model.history(user), k, int(user))[:k],
            source="model",
        )
        for user, row in zip(users, scores)
    ]


def popularity_order(
    ds: RatingDataset, user_history: NDArray[np.int64], k: int, user: int | None = None
) -> NDArray[np.int64]:
    """Every unseen item, most interactions first."""
    counts = ds.item_counts().astype(np.float64)
    return _rank_candidates(counts, np.asarray(user_history, dtype=np.int64), k, user)


def recommend_popular(
    ds: RatingDataset,
    user_history: NDArray[np.int64],
    k: int,
    *,
    user_id: int = -1,
) -> RecommendationSet:
    """
    Top-k items by interaction count in ds, excluding the user's history.

    Raises:
        InsufficientCatalogError: Fewer than k unseen items.
    """
    ranked = popularity_order(ds, user_history, k, user_id)
    return RecommendationSet(user_id=int(user_id), items=ranked[:k], source="popularity")


def defense_pool_size(k: int, pool_multiplier: int, n_items: int, max_pool_fraction: float = 1.0) -> int:
    """
    Size of the popularity pool: pool_multiplier * k, capped at
    max_pool_fraction of the catalog but never below k.

    Raises:
        ValueError: pool_multiplier < 1 or max_pool_fraction outside (0, 1].
    """
    if pool_multiplier < 1:
        raise ValueError(f"pool_multiplier must be at least 1, got {pool_multiplier}")
    if not 0.0 < max_pool_fraction <= 1.0:
        raise ValueError(f"max_pool_fraction must lie in (0, 1], got {max_pool_fraction}")
    cap = max(k, int(np.floor(max_pool_fraction * n_items)))
    return min(pool_multiplier * k, cap)


def recommend_popular_randomized(
    ds: RatingDataset,
    user_history: NDArray[np.int64],
    k: int,
    pool_multiplier: int,
    rng: np.random.Generator,
    *,
    max_pool_fraction: float = 1.0,
    user_id: int = -1,
) -> RecommendationSet:
    """
    k distinct items drawn uniformly from the defense_pool_size most popular
    unseen items. The pool shrinks to all unseen items on small catalogs.

    Raises:
        ValueError: Invalid pool parameters.
        InsufficientCatalogError: Fewer than k unseen items.
    """
    size = defense_pool_size(k, pool_multiplier, ds.n_items, max_pool_fraction)
    ranked = popularity_order(ds, user_history, k, user_id)
    pool = ranked[:size]
    items = rng.choice(pool, size=k, replace=False)
    return RecommendationSet(user_id=int(user_id), items=items.astype(np.int64), source="popularity_randomized")
