"""
Unit Tests for AUC.
"""

import numpy as np
import pytest

from modules.mialab.core.exceptions import DegenerateLabelsError, ShapeMismatchError
from modules.mialab.numerics.metrics import ScoredLabels, auc


def _pairwise_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


class TestAuc:
    """Tests for the rank-based Mann-Whitney AUC."""

    def test_perfect_ranking(self):
        assert auc([0.9, 0.1], [1, 0]) == 1.0

    def test_all_ties_give_one_half(self):
        assert auc([0.3] * 6, [1, 0, 1, 0, 0, 1]) == 0.5

    def test_inverted_ranking(self):
        assert auc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 0.0

    def test_equals_pairwise_oracle_exactly(self):
        """200 random instances with heavy ties match the quadratic oracle bit for bit."""
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 60))
            labels = rng.integers(0, 2, size=n)
            labels[0], labels[1] = 0, 1
            scores = np.round(rng.random(n), 1)
            assert auc(scores, labels) == _pairwise_auc(scores, labels)

    def test_invariant_under_increasing_transform(self):
        rng = np.random.default_rng(1)
        scores = rng.normal(size=50)
        labels = np.r_[np.zeros(25, dtype=int), np.ones(25, dtype=int)]
        rng.shuffle(labels)
        assert auc(np.exp(3.0 * scores) + 2.0, labels) == auc(scores, labels)

    def test_accepts_scored_labels(self):
        data = ScoredLabels(np.array([0.2, 0.7, 0.4]), np.array([0, 1, 1]))
        assert auc(data) == 1.0

    def test_single_class_is_degenerate(self):
        with pytest.raises(DegenerateLabelsError):
            auc([0.1, 0.4], [1, 1])

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            auc([0.1, 0.4, 0.5], [1, 0])

    def test_non_binary_labels_rejected(self):
        with pytest.raises(ShapeMismatchError):
            auc([0.1, 0.4], [2, 0])
