"""
Experiment output layout.

    <out>/data/<dataset>/             split bundle per dataset
    <out>/models/<side>_recommender.mlck
    <out>/models/attack_<method>.mlck
    <out>/vectors/  or  vectors_defended/
                    embeddings_<dataset>.csv, attack_vectors.csv,
                    target_labels.csv, recommendations_<origin>.csv
    <out>/latents/f_<kind>.csv        user_id,origin,label,v0..vD
    <out>/metrics/metrics_<method>.jsonl
    <out>/report.json, <out>/run_info.json

Report artifact paths are relative to <out> so the report does not depend
on where a run was written.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from modules.mialab.diffvec.vectors import ORIGINS, AttackDataset
from modules.mialab.dlmia.training import AlternatingResult

LATENT_KINDS = ("diff", "inv", "spe", "dis", "rew")


def bundle_dir(out_dir: Path, dataset: str) -> Path:
    return out_dir / "data" / dataset


def recommender_path(out_dir: Path, side: str) -> Path:
    return out_dir / "models" / f"{side}_recommender.mlck"


def attack_state_path(out_dir: Path, method: str) -> Path:
    return out_dir / "models" / f"attack_{method}.mlck"


def vectors_dir(out_dir: Path, defended: bool) -> Path:
    return out_dir / ("vectors_defended" if defended else "vectors")


def metrics_dir(out_dir: Path) -> Path:
    return out_dir / "metrics"


def relative(out_dir: Path, path: Path) -> str:
    return Path(path).relative_to(out_dir).as_posix()


def _latent_frame(dataset: AttackDataset, by_origin: dict[str, NDArray[np.float64]]) -> pd.DataFrame:
    frames = []
    for origin in ORIGINS:
        values = by_origin[origin]
        frame = pd.DataFrame(values, columns=[f"v{j}" for j in range(values.shape[1])])
        frame.insert(0, "user_id", dataset.user_ids(origin))
        frame.insert(1, "origin", origin)
        labels = dataset.shadow_labels if origin == "shadow" else dataset.target_labels
        frame.insert(2, "label", labels)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def write_latents(
    directory: Path, dataset: AttackDataset, result: AlternatingResult, d_inv: int
) -> dict[str, Path]:
    """
    Case-study dumps for external plotting: raw difference vectors, the
    invariant and specific parts of the pre-reweighting encoding, the full
    pre-reweighting encoding, and the encoding after reweighting.

    Target rows carry their true labels so plots can be colored; nothing
    trains on these files.
    """
    directory.mkdir(parents=True, exist_ok=True)
    dis = {"shadow": result.shadow_dis, "target": result.target_dis}
    layers = {
        "diff": {origin: dataset.diffs(origin) for origin in ORIGINS},
        "inv": {origin: dis[origin][:, :d_inv] for origin in ORIGINS},
        "spe": {origin: dis[origin][:, d_inv:] for origin in ORIGINS},
        "dis": dis,
        "rew": {"shadow": result.shadow_rew, "target": result.target_rew},
    }
    paths = {}
    for kind in LATENT_KINDS:
        path = directory / f"f_{kind}.csv"
        _latent_frame(dataset, layers[kind]).to_csv(path, index=False, float_format="%.17g")
        paths[f"latents_{kind}"] = path
    return paths


def write_json(path: Path, payload: dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path
