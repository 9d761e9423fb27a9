"""
Ranking metrics.

AUC as the normalized Mann-Whitney U statistic over average ranks, so ties
count one half.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import rankdata

from modules.mialab.core.exceptions import DegenerateLabelsError, ShapeMismatchError


@dataclass(frozen=True)
class ScoredLabels:
    """Classifier scores for the positive class next to binary ground truth."""

    scores: NDArray[np.float64]
    labels: NDArray[np.int64]

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64).ravel()
        labels = np.asarray(self.labels).ravel()
        if scores.size != labels.size or scores.size < 1:
            raise ShapeMismatchError(
                f"scores ({scores.size}) and labels ({labels.size}) must be equal and non-empty"
            )
        if not np.all(np.isin(labels, (0, 1))):
            raise ShapeMismatchError("labels must be 0 or 1")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels.astype(np.int64))


def auc(scores: ArrayLike | ScoredLabels, labels: ArrayLike | None = None) -> float:
    """
    Area under the ROC curve.

    Accepts a ScoredLabels instance or parallel score / label arrays.

    Raises:
        DegenerateLabelsError: When only one class is present.
    """
    data = scores if isinstance(scores, ScoredLabels) else ScoredLabels(scores, labels)
    positive = data.labels == 1
    n_pos = int(positive.sum())
    n_neg = data.labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(
            f"AUC needs both classes, got {n_pos} positives and {n_neg} negatives"
        )
    ranks = rankdata(data.scores, method="average")
    u_statistic = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_statistic / (n_pos * n_neg))
