"""
Synthetic rating data with planted taste groups.

Every latent factor is a taste group. A user belongs to one group; an item
belongs to one group and carries an appeal in [0, 1]. The planted affinity
of a user for an item is GROUP_AFFINITY + appeal inside the user's group and
zero outside it, so personal taste dominates item popularity.

The items a user rates are drawn preferring high affinity (Gumbel top-k),
which still leaves some ratings outside the user's group, and the rating is
a clipped affine transform of the standardized affinity plus small noise.
"""

import numpy as np
from numpy.typing import NDArray

from modules.mialab.core.logging import get_logger
from modules.mialab.data.dataset import RatingDataset

logger = get_logger(__name__)

GROUP_AFFINITY = 1.0
RATING_CENTER = 3.0
RATING_SCALE = 0.6
RATING_NOISE = 0.25
SELECTION_TEMPERATURE = 1.0
TIMESTAMP_START = 946_684_800
TIMESTAMP_SPAN = 94_608_000


def planted_factors(
    n_users: int, n_items: int, n_latent: int, seed: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    The (user, item) factor matrices generate_synthetic plants for a seed.

    User rows are one-hot group indicators. Item rows hold GROUP_AFFINITY +
    appeal in the item's group column and zero elsewhere; groups get
    n_items / n_latent items each, up to rounding.
    """
    rng = np.random.default_rng([seed, 0])
    user_groups = rng.integers(0, n_latent, size=n_users)
    item_groups = rng.permutation(np.arange(n_items) % n_latent)
    appeal = rng.uniform(0.0, 1.0, size=n_items)

    user_factors = np.zeros((n_users, n_latent))
    user_factors[np.arange(n_users), user_groups] = 1.0
    item_factors = np.zeros((n_items, n_latent))
    item_factors[np.arange(n_items), item_groups] = GROUP_AFFINITY + appeal
    return user_factors, item_factors


def generate_synthetic(
    n_users: int,
    n_items: int,
    n_latent: int,
    density: float,
    seed: int,
) -> RatingDataset:
    """
    Sample round(density · n_items) rated items per user (at least one).

    Item labels are the planted item indices, so planted factors can be
    matched after compaction.
    """
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    if n_users < 1 or n_items < 1 or n_latent < 1:
        raise ValueError("n_users, n_items and n_latent must be positive")

    user_factors, item_factors = planted_factors(n_users, n_items, n_latent, seed)
    rng = np.random.default_rng([seed, 1])

    affinity = user_factors @ item_factors.T
    spread = affinity.std()
    standardized = (affinity - affinity.mean()) / spread if spread > 0 else np.zeros_like(affinity)

    per_user = max(1, int(round(density * n_items)))
    if per_user >= n_items:
        chosen = np.tile(np.arange(n_items), (n_users, 1))
    else:
        keys = SELECTION_TEMPERATURE * standardized + rng.gumbel(size=affinity.shape)
        chosen = np.sort(np.argpartition(-keys, per_user - 1, axis=1)[:, :per_user], axis=1)

    users = np.repeat(np.arange(n_users), chosen.shape[1])
    items = chosen.ravel()
    noise = rng.normal(0.0, RATING_NOISE, size=users.size)
    ratings = np.clip(RATING_CENTER + RATING_SCALE * standardized[users, items] + noise, 1.0, 5.0)
    timestamps = TIMESTAMP_START + rng.integers(0, TIMESTAMP_SPAN, size=users.size)

    dataset = RatingDataset.from_raw(users, items, ratings, timestamps)
    logger.info(
        "Synthetic dataset generated",
        extra={
            "users": dataset.n_users,
            "items": dataset.n_items,
            "interactions": len(dataset),
            "n_latent": n_latent,
            "seed": seed,
        },
    )
    return dataset
