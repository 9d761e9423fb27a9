"""
Per-epoch training metrics.

Each record is one JSON line: {phase, epoch, loss_bce, loss_elbo, loss_est,
target_auc?} plus phase-specific extras (outer, step, residual_start,
residual_end). Fields that do not apply to a phase are left out.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from modules.mialab.core.exceptions import DegenerateLabelsError
from modules.mialab.numerics.metrics import auc


@dataclass
class MetricsRecorder:
    path: Path | None = None
    records: list[dict[str, Any]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.path is not None:
            self.path = Path(self.path)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("")

    def record(self, phase: str, epoch: int, **values: Any) -> dict[str, Any]:
        entry: dict[str, Any] = {"phase": phase, "epoch": epoch}
        entry.update({k: v for k, v in values.items() if v is not None})
        self.records.append(entry)
        if self.path is not None:
            with open(self.path, "a") as f:
                f.write(json.dumps(entry) + "\n")
        return entry

    def phase(self, name: str) -> list[dict[str, Any]]:
        return [r for r in self.records if r["phase"] == name]


def monitor_auc(scores: NDArray[np.float64], labels: NDArray[np.int64] | None) -> float | None:
    """AUC for monitoring, or None without usable labels."""
    if labels is None:
        return None
    try:
        return auc(scores, labels)
    except DegenerateLabelsError:
        return None


def read_metrics(path: str | Path) -> list[dict[str, Any]]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
