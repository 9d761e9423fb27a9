"""
Interaction-count filtering.
"""

import numpy as np

from modules.mialab.core.logging import get_logger
from modules.mialab.data.dataset import RatingDataset

logger = get_logger(__name__)


def filter_min_interactions(ds: RatingDataset, min_user: int, min_item: int) -> RatingDataset:
    """
    Drop users with fewer than min_user and items with fewer than min_item
    records, repeating until neither rule removes anything. Ids of the
    result are compacted.
    """
    if min_user < 0 or min_item < 0:
        raise ValueError("interaction thresholds must be >= 0")

    keep = np.ones(len(ds), dtype=bool)
    rounds = 0
    while True:
        users = ds.users[keep]
        items = ds.items[keep]
        user_ok = np.bincount(users, minlength=ds.n_users) >= min_user
        item_ok = np.bincount(items, minlength=ds.n_items) >= min_item
        record_ok = user_ok[ds.users] & item_ok[ds.items] & keep
        rounds += 1
        if np.array_equal(record_ok, keep):
            break
        keep = record_ok

    result = ds.select(keep).compact()
    logger.info(
        "Interaction filter applied",
        extra={
            "min_user": min_user,
            "min_item": min_item,
            "rounds": rounds,
            "kept_interactions": len(result),
            "dropped_interactions": len(ds) - len(result),
        },
    )
    return result
