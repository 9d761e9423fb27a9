"""
Item-based collaborative filtering.

Cosine similarity between item rating columns over the full neighborhood;
score(u, i) = sum over the user's history j of sim(i, j) * rating(u, j).
"""

import numpy as np
from numpy.typing import NDArray
from scipy import sparse

from modules.mialab.core.logging import get_logger
from modules.mialab.data.dataset import RatingDataset
from modules.mialab.recommenders.base import RecommenderModel

logger = get_logger(__name__)


def item_cosine_similarity(ratings: sparse.spmatrix) -> NDArray[np.float64]:
    """Dense item × item cosine matrix of a user × item rating matrix. Unrated items get 0."""
    ratings = sparse.csr_matrix(ratings, dtype=np.float64)
    gram = np.asarray((ratings.T @ ratings).todense())
    norms = np.sqrt(np.diag(gram))
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    similarity = gram * scale[:, None] * scale[None, :]
    return (similarity + similarity.T) / 2.0


def train_itembase(train: RatingDataset) -> RecommenderModel:
    if len(train) == 0:
        raise ValueError("cannot fit ItemBase on an empty training set")
    similarity = item_cosine_similarity(train.rating_matrix())
    logger.info(
        "ItemBase fitted",
        extra={"users": int(train.user_ids().size), "items": train.n_items, "interactions": len(train)},
    )
    return RecommenderModel(kind="item_base", train=train, similarity=similarity)
