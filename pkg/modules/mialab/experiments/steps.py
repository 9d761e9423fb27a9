"""
Step-wise pipeline.

The same stages as run_experiment, one command at a time, each reading
the previous step's files from the output directory:

    prepare_data_step       -> data/<dataset>/
    train_recommenders_step -> models/<side>_recommender.mlck
    generate_vectors_step   -> vectors/ (vectors_defended/ with the defense on)
    attack_step             -> attack_<method>.json, models/attack_<method>.mlck
                               (dlmia also writes its final scores and weights
                               into the attack vectors)

Every stage seeds from its own derived stream, so a step can be rerun
without rerunning the ones before it.
"""

from pathlib import Path

from modules.mialab.core.exceptions import ConfigurationError
from modules.mialab.core.logging import get_logger
from modules.mialab.data.persistence import load_bundle, save_bundle
from modules.mialab.diffvec.persistence import (
    read_attack_vectors,
    save_attack_dataset,
    write_attack_vectors,
    write_embeddings_csv,
)
from modules.mialab.diffvec.vectors import with_scores
from modules.mialab.dlmia.metrics import MetricsRecorder
from modules.mialab.dlmia.objectives import sample_scores
from modules.mialab.dlmia.state import AttackInputs, save_state
from modules.mialab.experiments import artifacts
from modules.mialab.experiments.stages import (
    SIDES,
    AttackOutcome,
    PreparedData,
    fit_embeddings,
    generate_vectors,
    prepare_data,
    run_biased,
    run_dlmia,
    run_pretrain,
    stage,
    train_recommenders,
)
from modules.mialab.recommenders.base import RecommenderModel
from modules.mialab.recommenders.persistence import load_recommender, save_recommender
from modules.mialab.schemas.experiment import ExperimentConfig
from modules.mialab.schemas.report import AttackMethod, AttackResult, LossSummary, SampleCounts

logger = get_logger(__name__)


def _require(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise ConfigurationError(f"{path} not found; run --service {produced_by} first with the same --out-dir")
    return path


def load_prepared(config: ExperimentConfig, out_dir: Path) -> PreparedData:
    names = dict.fromkeys((config.shadow_dataset, config.target_dataset))
    bundles = {name: load_bundle(_require(artifacts.bundle_dir(out_dir, name), "prepare-data")) for name in names}
    return PreparedData(bundles, config.shadow_dataset, config.target_dataset)


def load_recommenders(out_dir: Path) -> dict[str, RecommenderModel]:
    return {
        side: load_recommender(_require(artifacts.recommender_path(out_dir, side), "train-rec")) for side in SIDES
    }


def prepare_data_step(config: ExperimentConfig, out_dir: Path) -> dict[str, Path]:
    with stage("prepare_data"):
        data = prepare_data(config)
    return {name: save_bundle(bundle, artifacts.bundle_dir(out_dir, name)) for name, bundle in data.bundles.items()}


def train_recommenders_step(config: ExperimentConfig, out_dir: Path) -> dict[str, Path]:
    data = load_prepared(config, out_dir)
    with stage("train_recommenders"):
        models = train_recommenders(config, data)
    return {side: save_recommender(models[side], artifacts.recommender_path(out_dir, side)) for side in SIDES}


def generate_vectors_step(config: ExperimentConfig, out_dir: Path) -> dict[str, Path]:
    data = load_prepared(config, out_dir)
    models = load_recommenders(out_dir)
    vectors = artifacts.vectors_dir(out_dir, config.defense.enabled)
    with stage("fit_embeddings"):
        embeddings = fit_embeddings(config, data)
    paths = {
        f"embeddings_{name}": write_embeddings_csv(emb, vectors / f"embeddings_{name}.csv")
        for name, emb in embeddings.items()
    }
    with stage("generate_vectors"):
        attack_ds = generate_vectors(config, data, embeddings, models)
    paths.update(save_attack_dataset(attack_ds, vectors))
    return paths


def attack_step(config: ExperimentConfig, out_dir: Path, method: AttackMethod) -> AttackResult:
    """
    Train and evaluate one attack on stored vectors. Target labels are read
    only for the AUC and the monitoring column of the metrics file.
    """
    vectors = _require(artifacts.vectors_dir(out_dir, config.defense.enabled), "gen-vectors")
    shadow, target, target_labels = read_attack_vectors(vectors)
    inputs = AttackInputs.from_samples(shadow, target)
    metrics = MetricsRecorder(artifacts.metrics_dir(out_dir) / f"metrics_{method}.jsonl")

    with stage("attack"):
        if method == "biased":
            outcome: AttackOutcome = run_biased(config, inputs, target_labels, metrics)
        elif method == "pretrain":
            outcome = run_pretrain(config, inputs, target_labels, metrics)
        else:
            outcome = run_dlmia(config, inputs, target_labels, metrics)
    save_state(outcome.state, artifacts.attack_state_path(out_dir, method))
    if method == "dlmia":
        shadow_scores, shadow_weights, target_scores, target_weights = sample_scores(outcome.state)
        write_attack_vectors(
            with_scores(shadow, shadow_scores, shadow_weights),
            with_scores(target, target_scores, target_weights),
            vectors / "attack_vectors.csv",
        )

    result = AttackResult(
        method=method,
        auc=outcome.auc,
        samples=SampleCounts(
            shadow=len(shadow),
            target=len(target),
            target_members=int(target_labels.sum()),
            dim=inputs.input_dim,
        ),
        loss=LossSummary.from_trace(outcome.trace),
    )
    (out_dir / f"attack_{method}.json").write_text(result.model_dump_json(indent=2) + "\n")
    logger.info("Attack finished", extra={"method": method, "auc": round(outcome.auc, 6)})
    return result
