"""
Fitted-model checkpoints and recommendation dumps.

A model checkpoint stores the fitted matrices and the training interactions
in the tensor container; id spaces, label maps and the RMSE trace go into
the header metadata. Recommendations are written as CSV
`user_id,rank,item_id,source` with 1-based ranks.
"""

from collections.abc import Iterable
from pathlib import Path

import numpy as np
import pandas as pd

from modules.mialab.core.exceptions import CheckpointError
from modules.mialab.data.dataset import RatingDataset
from modules.mialab.nn.checkpoint import load_checkpoint, save_checkpoint
from modules.mialab.recommenders.base import RecommendationSet, RecommenderModel

RECOMMENDATION_COLUMNS = ["user_id", "rank", "item_id", "source"]
_MATRICES = ("similarity", "user_factors", "item_factors")


def save_recommender(model: RecommenderModel, path: str | Path) -> Path:
    train = model.train
    tensors = {
        "train.users": train.users,
        "train.items": train.items,
        "train.ratings": train.ratings,
        "train.timestamps": train.timestamps,
    }
    for name in _MATRICES:
        value = getattr(model, name)
        if value is not None:
            tensors[name] = value
    metadata = {
        "kind": model.kind,
        "n_users": train.n_users,
        "n_items": train.n_items,
        "user_labels": np.asarray(train.user_labels).tolist(),
        "item_labels": np.asarray(train.item_labels).tolist(),
        "rmse_trace": list(model.rmse_trace),
    }
    return save_checkpoint(path, tensors, metadata)


def load_recommender(path: str | Path) -> RecommenderModel:
    """
    Raises:
        CheckpointError: Container unreadable or not a recommender checkpoint.
    """
    tensors, metadata = load_checkpoint(path)
    try:
        train = RatingDataset(
            users=tensors["train.users"].astype(np.int64),
            items=tensors["train.items"].astype(np.int64),
            ratings=tensors["train.ratings"],
            timestamps=tensors["train.timestamps"].astype(np.int64),
            n_users=int(metadata["n_users"]),
            n_items=int(metadata["n_items"]),
            user_labels=np.asarray(metadata["user_labels"]),
            item_labels=np.asarray(metadata["item_labels"]),
        )
        return RecommenderModel(
            kind=metadata["kind"],
            train=train,
            rmse_trace=tuple(metadata.get("rmse_trace", [])),
            **{name: tensors[name] for name in _MATRICES if name in tensors},
        )
    except KeyError as e:
        raise CheckpointError(f"{path}: missing recommender field {e}") from e


def recommendations_frame(sets: Iterable[RecommendationSet]) -> pd.DataFrame:
    rows = [
        (rec.user_id, rank, int(item), rec.source)
        for rec in sets
        for rank, item in enumerate(rec.items.tolist(), start=1)
    ]
    return pd.DataFrame(rows, columns=RECOMMENDATION_COLUMNS)


def write_recommendations_csv(sets: Iterable[RecommendationSet], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    recommendations_frame(sets).to_csv(path, index=False)
    return path


def read_recommendations_csv(path: str | Path) -> list[RecommendationSet]:
    frame = pd.read_csv(path).sort_values(["user_id", "rank"], kind="mergesort")
    return [
        RecommendationSet(
            user_id=int(user),
            items=group["item_id"].to_numpy(dtype=np.int64),
            source=str(group["source"].iloc[0]),
        )
        for user, group in frame.groupby("user_id", sort=True)
    ]
