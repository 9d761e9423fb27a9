"""
Pipeline stages.

    prepare_data        load or generate each dataset, filter, split
    train_recommenders  shadow and target recommenders on member data
    fit_embeddings      item embeddings per dataset from its extraction subset
    generate_vectors    recommendation lists and difference vectors
    run_attacks         biased, pretrain-only and full DL-MIA attacks

Every stage draws from its own stream derived from the master seed, and
wraps module errors in ExperimentStageError carrying the stage name.
"""

from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from modules.mialab.core.exceptions import ApplicationError, ConfigurationError, ExperimentStageError
from modules.mialab.core.logging import get_logger
from modules.mialab.core.utils import derive_rng, derive_seed, stopwatch
from modules.mialab.data.dataset import RatingDataset
from modules.mialab.data.filtering import filter_min_interactions
from modules.mialab.data.loaders import load_amazon, load_movielens
from modules.mialab.data.splits import SplitBundle, make_splits, verify_split_bundle
from modules.mialab.data.synthetic import generate_synthetic
from modules.mialab.diffvec.embeddings import ItemEmbeddings, fit_item_embeddings
from modules.mialab.diffvec.vectors import AttackDataset, build_attack_dataset
from modules.mialab.dlmia.metrics import MetricsRecorder
from modules.mialab.dlmia.state import AttackInputs, DlMiaSpec, DlMiaState, init_state
from modules.mialab.dlmia.training import AlternatingResult, alternating_train, attack_predict, pretrain
from modules.mialab.numerics.metrics import auc
from modules.mialab.recommenders.base import RecommenderModel
from modules.mialab.recommenders.itembase import train_itembase
from modules.mialab.recommenders.lfm import train_lfm
from modules.mialab.schemas.experiment import ExperimentConfig, SyntheticDatasetConfig
from modules.mialab.schemas.report import AttackMethod

logger = get_logger(__name__)

SIDES = ("shadow", "target")


@contextmanager
def stage(name: str) -> Iterator[dict[str, float]]:
    """Log a stage and wrap module errors raised inside it. Yields the stage timer."""
    logger.info("Stage started", extra={"stage": name})
    with stopwatch() as timer:
        try:
            yield timer
        except ExperimentStageError:
            raise
        except ApplicationError as e:
            logger.error("Stage failed", extra={"stage": name, "code": e.code, "error": e.message})
            raise ExperimentStageError(name, e) from e
    logger.info("Stage finished", extra={"stage": name, "seconds": round(timer["seconds"], 3)})


# =============================================================================
# Data
# =============================================================================


@dataclass(frozen=True)
class PreparedData:
    """Split bundle per dataset name; shadow and target may share one."""

    bundles: dict[str, SplitBundle]
    shadow_dataset: str
    target_dataset: str

    def bundle(self, side: str) -> SplitBundle:
        return self.bundles[self.shadow_dataset if side == "shadow" else self.target_dataset]

    @property
    def cross_dataset(self) -> bool:
        return self.shadow_dataset != self.target_dataset


def load_source(config: ExperimentConfig, name: str) -> RatingDataset:
    """
    Raw interactions of one configured dataset, filtered.

    Raises:
        ConfigurationError: A file dataset without a path.
    """
    source = getattr(config.datasets, name)
    if isinstance(source, SyntheticDatasetConfig):
        ds = generate_synthetic(
            source.n_users,
            source.n_items,
            source.n_latent,
            source.density,
            seed=derive_seed(config.seed + source.seed_offset, "synthetic"),
        )
    else:
        if source.path is None:
            raise ConfigurationError(
                f"dataset {name!r} needs a file path (datasets.{name}.path or MIALAB_{name.upper()}_PATH)"
            )
        ds = load_movielens(source.path) if name == "movielens" else load_amazon(source.path)
    return filter_min_interactions(ds, source.min_user_interactions, source.min_item_interactions)


def prepare_data(config: ExperimentConfig) -> PreparedData:
    fractions = (config.split.shadow, config.split.target, config.split.extraction)
    bundles: dict[str, SplitBundle] = {}
    for name in dict.fromkeys((config.shadow_dataset, config.target_dataset)):
        ds = load_source(config, name)
        bundle = make_splits(ds, fractions, seed=derive_seed(config.seed, f"split:{name}"))
        verify_split_bundle(bundle)
        bundles[name] = bundle
    return PreparedData(bundles, config.shadow_dataset, config.target_dataset)


# =============================================================================
# Recommenders and vectors
# =============================================================================


def train_recommender(
    config: ExperimentConfig, algorithm: str, train: RatingDataset, side: str
) -> RecommenderModel:
    if algorithm == "item_base":
        return train_itembase(train)
    lfm = config.lfm
    return train_lfm(
        train,
        lfm.embed_size,
        lfm.learning_rate,
        lfm.regularization,
        lfm.epochs,
        seed=derive_seed(config.seed, f"lfm:{side}"),
    )


def train_recommenders(config: ExperimentConfig, data: PreparedData) -> dict[str, RecommenderModel]:
    algorithms = {"shadow": config.shadow_algorithm, "target": config.target_algorithm}
    return {
        side: train_recommender(config, algorithms[side], data.bundle(side).member_data(side), side)
        for side in SIDES
    }


def fit_embeddings(config: ExperimentConfig, data: PreparedData) -> dict[str, ItemEmbeddings]:
    gen = config.generator
    return {
        name: fit_item_embeddings(
            bundle.extraction,
            gen.dim,
            gen.learning_rate,
            gen.regularization,
            gen.epochs,
            seed=derive_seed(config.seed, f"generator:{name}"),
        )
        for name, bundle in data.bundles.items()
    }


def generate_vectors(
    config: ExperimentConfig,
    data: PreparedData,
    embeddings: dict[str, ItemEmbeddings],
    models: dict[str, RecommenderModel],
) -> AttackDataset:
    return build_attack_dataset(
        data.bundle("shadow"),
        embeddings[data.shadow_dataset],
        models["shadow"],
        models["target"],
        config.top_k,
        config.defense.enabled,
        derive_rng(config.seed, "recommend"),
        pool_multiplier=config.defense.pool_multiplier,
        max_pool_fraction=config.defense.max_pool_fraction,
        target_bundle=data.bundle("target") if data.cross_dataset else None,
        target_embeddings=embeddings[data.target_dataset] if data.cross_dataset else None,
    )


# =============================================================================
# Attacks
# =============================================================================


@dataclass(frozen=True)
class AttackOutcome:
    method: AttackMethod
    state: DlMiaState
    target_probs: NDArray[np.float64]
    auc: float
    trace: list[float]
    alternating: AlternatingResult | None = None


def _initial_state(config: ExperimentConfig, inputs: AttackInputs, mode: str, stream: str) -> DlMiaState:
    dl = config.dlmia
    spec = DlMiaSpec.from_config(dl, inputs.input_dim, mode=mode)
    return init_state(
        spec,
        inputs.shadow.shape[0],
        inputs.target.shape[0],
        derive_rng(config.seed, stream),
        score_range=(dl.score_init_low, dl.score_init_high),
        log_var_init=dl.log_var_init,
        kappa_init=dl.kappa_init,
    )


def _recorder(metrics_dir: Path | None, method: str) -> MetricsRecorder | None:
    return None if metrics_dir is None else MetricsRecorder(metrics_dir / f"metrics_{method}.jsonl")


def run_biased(
    config: ExperimentConfig,
    inputs: AttackInputs,
    target_labels: NDArray[np.int64],
    metrics: MetricsRecorder | None = None,
) -> AttackOutcome:
    """The attack MLP trained directly on difference vectors."""
    state = _initial_state(config, inputs, "identity", "attack:biased")
    state, trace = pretrain(
        state,
        inputs,
        config.dlmia,
        derive_rng(config.seed, "train:biased"),
        metrics=metrics,
        target_labels=target_labels,
        phase="biased",
    )
    probs = attack_predict(state, inputs.target)
    return AttackOutcome("biased", state, probs, auc(probs, target_labels), trace)


def run_pretrain(
    config: ExperimentConfig,
    inputs: AttackInputs,
    target_labels: NDArray[np.int64],
    metrics: MetricsRecorder | None = None,
) -> AttackOutcome:
    """Disentangled encoder and attack trained jointly, no reweighting."""
    state = _initial_state(config, inputs, "disentangled", "attack:disentangled")
    state, trace = pretrain(
        state,
        inputs,
        config.dlmia,
        derive_rng(config.seed, "train:pretrain"),
        metrics=metrics,
        target_labels=target_labels,
    )
    probs = attack_predict(state, inputs.target)
    return AttackOutcome("pretrain", state, probs, auc(probs, target_labels), trace)


def run_dlmia(
    config: ExperimentConfig,
    inputs: AttackInputs,
    target_labels: NDArray[np.int64],
    metrics: MetricsRecorder | None = None,
    pretrained: AttackOutcome | None = None,
) -> AttackOutcome:
    """Alternating training from the pretrain-only state; pretrains first when none is given."""
    if pretrained is None:
        pretrained = run_pretrain(config, inputs, target_labels, metrics)
    result = alternating_train(
        pretrained.state,
        inputs,
        config.dlmia,
        derive_rng(config.seed, "train:alternating"),
        metrics=metrics,
        target_labels=target_labels,
    )
    return AttackOutcome(
        method="dlmia",
        state=result.state,
        target_probs=result.target_probs,
        auc=auc(result.target_probs, target_labels),
        trace=pretrained.trace + result.trace,
        alternating=result,
    )


def run_attacks(
    config: ExperimentConfig,
    inputs: AttackInputs,
    target_labels: NDArray[np.int64],
    metrics_dir: Path | None = None,
) -> dict[str, AttackOutcome]:
    """
    The ablation ladder on one attack dataset. dlmia continues from the
    pretrain-only state, so the two share their pretraining exactly.
    """
    biased = run_biased(config, inputs, target_labels, _recorder(metrics_dir, "biased"))
    dl_metrics = _recorder(metrics_dir, "dlmia")
    pre = run_pretrain(config, inputs, target_labels, dl_metrics)
    full = run_dlmia(config, inputs, target_labels, dl_metrics, pretrained=pre)
    for outcome in (biased, pre, full):
        logger.info("Attack evaluated", extra={"method": outcome.method, "auc": round(outcome.auc, 6)})
    return {"biased": biased, "pretrain": pre, "dlmia": full}
