"""
Unit Tests for Item Embeddings.
"""

import numpy as np
import pytest

from modules.mialab.core.exceptions import CoverageError
from modules.mialab.data.dataset import RatingDataset
from modules.mialab.diffvec.embeddings import fit_item_embeddings


def _dense(matrix: np.ndarray) -> RatingDataset:
    users, items = np.nonzero(matrix)
    return RatingDataset(
        users=users.astype(np.int64),
        items=items.astype(np.int64),
        ratings=matrix[users, items],
        timestamps=np.zeros(users.size, dtype=np.int64),
        n_users=matrix.shape[0],
        n_items=matrix.shape[1],
        user_labels=np.arange(matrix.shape[0]),
        item_labels=np.arange(matrix.shape[1]),
    )


@pytest.fixture
def planted():
    rng = np.random.default_rng(8)
    return np.outer(rng.uniform(1.0, 2.2, size=20), rng.uniform(1.0, 2.2, size=15))


class TestFitItemEmbeddings:
    """Tests for the generator factorization."""

    def test_reconstructs_planted_rank_one(self, planted):
        emb = fit_item_embeddings(_dense(planted), 4, 0.01, 0.001, 200, seed=0)
        assert emb.rmse_trace[-1] < 0.05
        assert emb.matrix.shape == (15, 4)

    def test_same_seed_same_embeddings(self, planted):
        first = fit_item_embeddings(_dense(planted), 3, 0.01, 0.01, 5, seed=2)
        second = fit_item_embeddings(_dense(planted), 3, 0.01, 0.01, 5, seed=2)
        np.testing.assert_array_equal(first.matrix, second.matrix)

    def test_identical_columns_get_identical_embeddings(self, planted):
        planted[:, 1] = planted[:, 0]
        emb = fit_item_embeddings(_dense(planted), 1, 0.01, 0.001, 300, seed=0)
        np.testing.assert_allclose(emb.matrix[0], emb.matrix[1], atol=1e-3)

    def test_uncovered_item_rejected(self, planted):
        planted[:, 4] = 0.0
        with pytest.raises(CoverageError):
            fit_item_embeddings(_dense(planted), 2, 0.01, 0.01, 1, seed=0)
