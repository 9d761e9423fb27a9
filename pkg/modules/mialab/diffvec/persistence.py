"""
CSV dumps of embeddings and attack datasets.

    embeddings.csv                item_id,dim0..dimD
    attack_vectors.csv            user_id,origin,label,truth_score,weight,diff0..diffD
                                  (target label blank)
    target_labels.csv             user_id,label  (evaluation only)
    recommendations_<origin>.csv  user_id,rank,item_id,source

truth_score and weight are 1 until a DL-MIA run writes its final values back.
read_attack_vectors restores the samples for a later attack run.
"""

from pathlib import Path

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from modules.mialab.diffvec.embeddings import ItemEmbeddings
from modules.mialab.diffvec.vectors import ORIGINS, AttackDataset, AttackSample
from modules.mialab.recommenders.persistence import write_recommendations_csv


def _columns(prefix: str, dim: int) -> list[str]:
    return [f"{prefix}{j}" for j in range(dim)]


def write_embeddings_csv(emb: ItemEmbeddings, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(emb.matrix, columns=_columns("dim", emb.dim))
    frame.insert(0, "item_id", np.arange(emb.n_items))
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def read_embeddings_csv(path: str | Path) -> ItemEmbeddings:
    frame = pd.read_csv(path, float_precision="round_trip").sort_values("item_id")
    matrix = frame.drop(columns="item_id").to_numpy(dtype=np.float64)
    return ItemEmbeddings(matrix=matrix)


def attack_vectors_frame(shadow: list[AttackSample], target: list[AttackSample]) -> pd.DataFrame:
    frames = []
    for origin, samples in zip(ORIGINS, (shadow, target)):
        diffs = np.vstack([s.diff for s in samples])
        frame = pd.DataFrame(diffs, columns=_columns("diff", diffs.shape[1]))
        frame.insert(0, "user_id", [s.user_id for s in samples])
        frame.insert(1, "origin", origin)
        frame.insert(2, "label", pd.array([s.label for s in samples], dtype="Int64"))
        frame.insert(3, "truth_score", [s.truth_score for s in samples])
        frame.insert(4, "weight", [s.weight for s in samples])
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def write_attack_vectors(shadow: list[AttackSample], target: list[AttackSample], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    attack_vectors_frame(shadow, target).to_csv(path, index=False, float_format="%.17g")
    return path


def save_attack_dataset(
    dataset: AttackDataset, directory: str | Path, include_recommendations: bool = True
) -> dict[str, Path]:
    """Write the attack vectors, target labels and both recommendation lists; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "attack_vectors": directory / "attack_vectors.csv",
        "target_labels": directory / "target_labels.csv",
    }
    write_attack_vectors(dataset.shadow, dataset.target, paths["attack_vectors"])
    pd.DataFrame({
        "user_id": dataset.user_ids("target"),
        "label": dataset.target_labels,
    }).to_csv(paths["target_labels"], index=False)
    for origin in ORIGINS if include_recommendations else ():
        paths[f"recommendations_{origin}"] = write_recommendations_csv(
            dataset.recommendations[origin], directory / f"recommendations_{origin}.csv"
        )
    return paths


def read_attack_vectors(directory: str | Path) -> tuple[list[AttackSample], list[AttackSample], NDArray[np.int64]]:
    """
    Read attack_vectors.csv and target_labels.csv back.

    Returns:
        (shadow samples, target samples without labels, target labels in target sample order)
    """
    directory = Path(directory)
    frame = pd.read_csv(directory / "attack_vectors.csv", float_precision="round_trip")
    diff_columns = [c for c in frame.columns if c.startswith("diff")]
    for column in ("truth_score", "weight"):
        if column not in frame:
            frame[column] = 1.0
    samples: dict[str, list[AttackSample]] = {origin: [] for origin in ORIGINS}
    for row, diff in zip(frame.itertuples(index=False), frame[diff_columns].to_numpy(dtype=np.float64)):
        label = None if pd.isna(row.label) else int(row.label)
        samples[row.origin].append(
            AttackSample(
                user_id=int(row.user_id),
                diff=diff,
                origin=row.origin,
                label=label,
                truth_score=float(row.truth_score),
                weight=float(row.weight),
            )
        )
    labels = pd.read_csv(directory / "target_labels.csv").set_index("user_id")["label"]
    target_labels = labels.loc[[s.user_id for s in samples["target"]]].to_numpy(dtype=np.int64)
    return samples["shadow"], samples["target"], target_labels
