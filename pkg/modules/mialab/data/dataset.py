"""
RatingDataset.

Columnar interaction records (user, item, rating, timestamp) with dense
integer ids. The original identifiers are kept in user_labels / item_labels
so every remapping stays a recorded bijection.

Several datasets can share one id space: the subsets of a split all carry
the full user range and the same item catalog, so an id means the same
user or item everywhere.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from scipy import sparse

from modules.mialab.core.exceptions import ShapeMismatchError

COLUMNS = ["user_id", "item_id", "rating", "timestamp"]


@dataclass(frozen=True)
class RatingDataset:
    users: NDArray[np.int64]
    items: NDArray[np.int64]
    ratings: NDArray[np.float64]
    timestamps: NDArray[np.int64]
    n_users: int
    n_items: int
    user_labels: NDArray
    item_labels: NDArray

    def __post_init__(self) -> None:
        n = self.users.shape[0]
        for name in ("items", "ratings", "timestamps"):
            if getattr(self, name).shape != (n,):
                raise ShapeMismatchError(f"column {name} does not have {n} entries")
        if self.user_labels.shape[0] != self.n_users or self.item_labels.shape[0] != self.n_items:
            raise ShapeMismatchError("label maps must cover the id ranges")
        if n and (self.users.max() >= self.n_users or self.items.max() >= self.n_items):
            raise ShapeMismatchError("ids exceed the declared id ranges")

    def __len__(self) -> int:
        return int(self.users.shape[0])

    @classmethod
    def empty(cls) -> "RatingDataset":
        return cls(
            users=np.zeros(0, dtype=np.int64),
            items=np.zeros(0, dtype=np.int64),
            ratings=np.zeros(0),
            timestamps=np.zeros(0, dtype=np.int64),
            n_users=0,
            n_items=0,
            user_labels=np.zeros(0, dtype=np.int64),
            item_labels=np.zeros(0, dtype=np.int64),
        )

    @classmethod
    def from_raw(
        cls,
        users: NDArray,
        items: NDArray,
        ratings: NDArray,
        timestamps: NDArray,
    ) -> "RatingDataset":
        """Build a dataset from raw identifiers, remapping both sides densely in sorted order."""
        user_labels, user_idx = np.unique(np.asarray(users), return_inverse=True)
        item_labels, item_idx = np.unique(np.asarray(items), return_inverse=True)
        return cls(
            users=user_idx.astype(np.int64).ravel(),
            items=item_idx.astype(np.int64).ravel(),
            ratings=np.asarray(ratings, dtype=np.float64),
            timestamps=np.asarray(timestamps, dtype=np.int64),
            n_users=int(user_labels.size),
            n_items=int(item_labels.size),
            user_labels=user_labels,
            item_labels=item_labels,
        )

    def select(self, mask: NDArray[np.bool_]) -> "RatingDataset":
        """Keep the masked records; id space unchanged."""
        return RatingDataset(
            users=self.users[mask],
            items=self.items[mask],
            ratings=self.ratings[mask],
            timestamps=self.timestamps[mask],
            n_users=self.n_users,
            n_items=self.n_items,
            user_labels=self.user_labels,
            item_labels=self.item_labels,
        )

    def restrict_users(self, user_ids: NDArray[np.int64]) -> "RatingDataset":
        """Records of the given users only; id space unchanged."""
        return self.select(np.isin(self.users, user_ids))

    def compact(self) -> "RatingDataset":
        """Drop ids without records and renumber densely, carrying labels along."""
        kept_users, user_idx = np.unique(self.users, return_inverse=True)
        kept_items, item_idx = np.unique(self.items, return_inverse=True)
        return RatingDataset(
            users=user_idx.astype(np.int64).ravel(),
            items=item_idx.astype(np.int64).ravel(),
            ratings=self.ratings,
            timestamps=self.timestamps,
            n_users=int(kept_users.size),
            n_items=int(kept_items.size),
            user_labels=self.user_labels[kept_users],
            item_labels=self.item_labels[kept_items],
        )

    def user_ids(self) -> NDArray[np.int64]:
        """Sorted ids of users that have at least one record."""
        return np.unique(self.users)

    def item_ids(self) -> NDArray[np.int64]:
        """Sorted ids of items that have at least one record."""
        return np.unique(self.items)

    def user_counts(self) -> NDArray[np.int64]:
        return np.bincount(self.users, minlength=self.n_users)

    def item_counts(self) -> NDArray[np.int64]:
        return np.bincount(self.items, minlength=self.n_items)

    def histories(self) -> dict[int, NDArray[np.int64]]:
        """user id → sorted item ids of that user's records."""
        order = np.lexsort((self.items, self.users))
        users = self.users[order]
        items = self.items[order]
        boundaries = np.flatnonzero(np.diff(users)) + 1
        return {
            int(chunk_users[0]): chunk_items
            for chunk_users, chunk_items in zip(np.split(users, boundaries), np.split(items, boundaries))
            if chunk_users.size
        }

    def rating_matrix(self) -> sparse.csr_matrix:
        """n_users × n_items sparse rating matrix."""
        return sparse.csr_matrix(
            (self.ratings, (self.users, self.items)), shape=(self.n_users, self.n_items)
        )

    def to_frame(self) -> pd.DataFrame:
        """Records sorted by (user_id, item_id)."""
        frame = pd.DataFrame({
            "user_id": self.users,
            "item_id": self.items,
            "rating": self.ratings,
            "timestamp": self.timestamps,
        })
        return frame.sort_values(["user_id", "item_id"], kind="mergesort").reset_index(drop=True)

    def equals(self, other: "RatingDataset") -> bool:
        """Same records in the same order and the same id space."""
        return (
            self.n_users == other.n_users
            and self.n_items == other.n_items
            and np.array_equal(self.users, other.users)
            and np.array_equal(self.items, other.items)
            and np.array_equal(self.ratings, other.ratings)
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.user_labels, other.user_labels)
            and np.array_equal(self.item_labels, other.item_labels)
        )
