"""
Dataset and split dumps.

A dataset is a CSV sorted by (user_id, item_id) with header
`user_id,item_id,rating,timestamp` plus a JSON sidecar holding the id space
and label maps. A split bundle is three such CSVs and one bundle.json with
the member partitions.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from modules.mialab.data.dataset import COLUMNS, RatingDataset
from modules.mialab.data.splits import SplitBundle

_SUBSETS = ("shadow", "target", "extraction")
_PARTITIONS = ("shadow_members", "shadow_nonmembers", "target_members", "target_nonmembers")


def _labels_to_json(labels: np.ndarray) -> list[Any]:
    return np.asarray(labels).tolist()


def write_dataset_csv(ds: RatingDataset, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ds.to_frame()[COLUMNS].to_csv(path, index=False, float_format="%.17g")
    return path


def _read_dataset_csv(path: Path, meta: dict[str, Any]) -> RatingDataset:
    frame = pd.read_csv(
        path,
        dtype={"user_id": np.int64, "item_id": np.int64, "timestamp": np.int64},
        float_precision="round_trip",
    )
    return RatingDataset(
        users=frame["user_id"].to_numpy(dtype=np.int64),
        items=frame["item_id"].to_numpy(dtype=np.int64),
        ratings=frame["rating"].to_numpy(dtype=np.float64),
        timestamps=frame["timestamp"].to_numpy(dtype=np.int64),
        n_users=int(meta["n_users"]),
        n_items=int(meta["n_items"]),
        user_labels=np.asarray(meta["user_labels"]),
        item_labels=np.asarray(meta["item_labels"]),
    )


def save_dataset(ds: RatingDataset, path: str | Path) -> Path:
    """Write `<path>` (CSV) and `<path>.json` (sidecar)."""
    path = write_dataset_csv(ds, path)
    sidecar = {
        "n_users": ds.n_users,
        "n_items": ds.n_items,
        "interactions": len(ds),
        "user_labels": _labels_to_json(ds.user_labels),
        "item_labels": _labels_to_json(ds.item_labels),
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))
    return path


def load_dataset(path: str | Path) -> RatingDataset:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return _read_dataset_csv(path, meta)


def save_bundle(bundle: SplitBundle, directory: str | Path) -> Path:
    """Write shadow.csv, target.csv, extraction.csv and bundle.json into directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in _SUBSETS:
        write_dataset_csv(getattr(bundle, name), directory / f"{name}.csv")
    sidecar: dict[str, Any] = {
        "n_users": bundle.shadow.n_users,
        "n_items": bundle.shadow.n_items,
        "counts": {
            name: {
                "users": int(getattr(bundle, name).user_ids().size),
                "interactions": len(getattr(bundle, name)),
            }
            for name in _SUBSETS
        },
        "user_labels": _labels_to_json(bundle.shadow.user_labels),
        "item_labels": _labels_to_json(bundle.shadow.item_labels),
    }
    for name in _PARTITIONS:
        sidecar[name] = getattr(bundle, name).tolist()
    (directory / "bundle.json").write_text(json.dumps(sidecar, indent=2))
    return directory


def load_bundle(directory: str | Path) -> SplitBundle:
    directory = Path(directory)
    meta = json.loads((directory / "bundle.json").read_text())
    subsets = {name: _read_dataset_csv(directory / f"{name}.csv", meta) for name in _SUBSETS}
    partitions = {name: np.asarray(meta[name], dtype=np.int64) for name in _PARTITIONS}
    return SplitBundle(**subsets, **partitions)
