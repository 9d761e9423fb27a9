"""
Experiment Report Schemas.

report.json is the serialized ExperimentReport. It holds nothing that
varies between reruns with the same seed (wall-clock times go to
run_info.json), so two runs of one configuration write identical bytes.
"""

import json
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from modules.mialab.schemas.experiment import ExperimentConfig

AttackMethod = Literal["biased", "pretrain", "dlmia"]
ATTACK_METHODS: tuple[AttackMethod, ...] = ("biased", "pretrain", "dlmia")


class _ReportBase(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LossSummary(_ReportBase):
    """First, last and lowest value of one loss trace."""

    steps: int = Field(ge=0)
    first: float | None = None
    last: float | None = None
    minimum: float | None = None

    @classmethod
    def from_trace(cls, trace: list[float]) -> "LossSummary":
        if not trace:
            return cls(steps=0)
        return cls(steps=len(trace), first=trace[0], last=trace[-1], minimum=min(trace))


class ResidualRecord(_ReportBase):
    outer_epoch: int = Field(ge=1)
    start: float = Field(ge=0.0)
    end: float = Field(ge=0.0)


class SampleCounts(_ReportBase):
    shadow: int = Field(ge=0)
    target: int = Field(ge=0)
    target_members: int = Field(ge=0)
    dim: int = Field(ge=1)


class ExperimentReport(_ReportBase):
    """Result of one experiment run."""

    config: ExperimentConfig
    biased_auc: float = Field(ge=0.0, le=1.0)
    pretrain_auc: float = Field(ge=0.0, le=1.0)
    dlmia_auc: float = Field(ge=0.0, le=1.0)
    samples: SampleCounts
    losses: dict[str, LossSummary]
    residuals: list[ResidualRecord]
    artifacts: dict[str, str] = Field(default_factory=dict)

    def auc(self, method: AttackMethod) -> float:
        return {"biased": self.biased_auc, "pretrain": self.pretrain_auc, "dlmia": self.dlmia_auc}[method]

    def to_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"


class AucSummary(_ReportBase):
    mean: float
    std: float
    values: list[float]

    @classmethod
    def from_values(cls, values: list[float]) -> "AucSummary":
        arr = np.asarray(values, dtype=np.float64)
        return cls(mean=float(arr.mean()), std=float(arr.std()), values=[float(v) for v in arr])


class RepetitionReport(_ReportBase):
    """Paired-seed repetitions of one configuration."""

    setting: str
    defense: bool
    seeds: list[int]
    biased: AucSummary
    pretrain: AucSummary
    dlmia: AucSummary
    runs: list[str]

    def to_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"


class AttackResult(_ReportBase):
    """Outcome of a single attack command on stored attack vectors."""

    method: AttackMethod
    auc: float = Field(ge=0.0, le=1.0)
    samples: SampleCounts
    loss: LossSummary


def report_json_schema() -> dict[str, Any]:
    """JSON schema of report.json."""
    return ExperimentReport.model_json_schema()


def report_json_schema_text() -> str:
    return json.dumps(report_json_schema(), indent=2, sort_keys=True) + "\n"
