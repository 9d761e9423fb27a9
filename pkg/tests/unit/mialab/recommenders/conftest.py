"""Fixtures shared by recommender tests."""

import numpy as np
import pytest

from modules.mialab.data.dataset import RatingDataset


def dataset_from_dense(matrix: np.ndarray) -> RatingDataset:
    """Records for every non-zero cell, keeping the matrix shape as the id space."""
    users, items = np.nonzero(matrix)
    return RatingDataset(
        users=users.astype(np.int64),
        items=items.astype(np.int64),
        ratings=matrix[users, items].astype(np.float64),
        timestamps=np.zeros(users.size, dtype=np.int64),
        n_users=matrix.shape[0],
        n_items=matrix.shape[1],
        user_labels=np.arange(matrix.shape[0]),
        item_labels=np.arange(matrix.shape[1]),
    )


@pytest.fixture
def from_dense():
    return dataset_from_dense


@pytest.fixture
def rank_one():
    """Planted rank-1 20 x 15 rating matrix with entries in [1, 4.84]."""
    rng = np.random.default_rng(42)
    user_side = rng.uniform(1.0, 2.2, size=20)
    item_side = rng.uniform(1.0, 2.2, size=15)
    matrix = np.outer(user_side, item_side)
    return dataset_from_dense(matrix), matrix


@pytest.fixture
def popularity_fixture():
    """Six users; item interaction counts are [1, 4, 2, 4, 0, 3]."""
    matrix = np.zeros((6, 6))
    counts = [1, 4, 2, 4, 0, 3]
    for item, count in enumerate(counts):
        matrix[:count, item] = 3.0
    return dataset_from_dense(matrix)
