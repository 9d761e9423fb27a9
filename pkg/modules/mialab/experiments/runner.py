"""
Experiment runner.

run_experiment executes every stage in memory and writes the artifacts the
feature flags enable. run_repetitions repeats it over paired seeds
(master seed + index), in parallel processes when asked to.
"""

from concurrent.futures import as_completed
from pathlib import Path
from typing import Any

from modules.mialab.core.concurrency import get_cpu_pool, shutdown_pools
from modules.mialab.core.config import get_app_config
from modules.mialab.core.config_schema import FeaturesSchema
from modules.mialab.core.logging import get_logger
from modules.mialab.core.utils import stopwatch
from modules.mialab.data.persistence import save_bundle
from modules.mialab.diffvec.persistence import save_attack_dataset, write_embeddings_csv
from modules.mialab.dlmia.objectives import sample_scores
from modules.mialab.dlmia.state import AttackInputs, save_state
from modules.mialab.experiments import artifacts
from modules.mialab.experiments.stages import (
    SIDES,
    fit_embeddings,
    generate_vectors,
    prepare_data,
    run_attacks,
    stage,
    train_recommenders,
)
from modules.mialab.recommenders.persistence import save_recommender
from modules.mialab.schemas.experiment import ExperimentConfig
from modules.mialab.schemas.report import (
    ATTACK_METHODS,
    AucSummary,
    ExperimentReport,
    LossSummary,
    RepetitionReport,
    ResidualRecord,
    SampleCounts,
)

logger = get_logger(__name__)


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | Path,
    features: FeaturesSchema | None = None,
) -> ExperimentReport:
    """
    Data, recommenders, difference vectors and all three attacks, end to end.

    Raises:
        ExperimentStageError: Any module error, tagged with its stage.
    """
    features = features or get_app_config().features
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    timings: dict[str, dict[str, float]] = {}

    logger.info("Experiment started", extra={"setting": config.setting, "seed": config.seed})
    with stopwatch() as total:
        with stage("prepare_data") as timings["prepare_data"]:
            data = prepare_data(config)
        if features.artifacts_datasets_enabled:
            for name, bundle in data.bundles.items():
                paths[f"bundle_{name}"] = save_bundle(bundle, artifacts.bundle_dir(out_dir, name))

        with stage("train_recommenders") as timings["train_recommenders"]:
            models = train_recommenders(config, data)
        if features.artifacts_checkpoints_enabled:
            for side in SIDES:
                paths[f"{side}_recommender"] = save_recommender(
                    models[side], artifacts.recommender_path(out_dir, side)
                )

        with stage("fit_embeddings") as timings["fit_embeddings"]:
            embeddings = fit_embeddings(config, data)
        vectors = artifacts.vectors_dir(out_dir, config.defense.enabled)
        if features.artifacts_embeddings_enabled:
            for name, emb in embeddings.items():
                paths[f"embeddings_{name}"] = write_embeddings_csv(emb, vectors / f"embeddings_{name}.csv")

        with stage("generate_vectors") as timings["generate_vectors"]:
            attack_ds = generate_vectors(config, data, embeddings, models)

        inputs = AttackInputs.from_samples(attack_ds.shadow, attack_ds.target)
        metrics = artifacts.metrics_dir(out_dir) if features.artifacts_metrics_enabled else None
        with stage("attack") as timings["attack"]:
            outcomes = run_attacks(config, inputs, attack_ds.target_labels, metrics_dir=metrics)
        attack_ds = attack_ds.with_training_state(*sample_scores(outcomes["dlmia"].state))
        if features.artifacts_attack_vectors_enabled:
            paths.update(
                save_attack_dataset(
                    attack_ds, vectors, include_recommendations=features.artifacts_recommendations_enabled
                )
            )
        if metrics is not None:
            for method in ("biased", "dlmia"):
                paths[f"metrics_{method}"] = metrics / f"metrics_{method}.jsonl"
        if features.artifacts_checkpoints_enabled:
            for method, outcome in outcomes.items():
                paths[f"attack_{method}"] = save_state(outcome.state, artifacts.attack_state_path(out_dir, method))
        alternating = outcomes["dlmia"].alternating
        if features.artifacts_latents_enabled and alternating is not None:
            paths.update(artifacts.write_latents(out_dir / "latents", attack_ds, alternating, config.dlmia.d_inv))

        report = ExperimentReport(
            config=config,
            biased_auc=outcomes["biased"].auc,
            pretrain_auc=outcomes["pretrain"].auc,
            dlmia_auc=outcomes["dlmia"].auc,
            samples=SampleCounts(
                shadow=len(attack_ds.shadow),
                target=len(attack_ds.target),
                target_members=int(attack_ds.target_labels.sum()),
                dim=inputs.input_dim,
            ),
            losses={
                "biased": LossSummary.from_trace(outcomes["biased"].trace),
                "pretrain": LossSummary.from_trace(outcomes["pretrain"].trace),
                "reweight": LossSummary.from_trace(alternating.trace if alternating else []),
            },
            residuals=[
                ResidualRecord(outer_epoch=i, start=start, end=end)
                for i, (start, end) in enumerate(alternating.residuals if alternating else [], start=1)
            ],
            artifacts={key: artifacts.relative(out_dir, path) for key, path in sorted(paths.items())},
        )
        (out_dir / "report.json").write_text(report.to_json())

    artifacts.write_json(
        out_dir / "run_info.json",
        {
            "seed": config.seed,
            "setting": config.setting,
            "runtime_seconds": round(total["seconds"], 3),
            "stage_seconds": {name: round(t["seconds"], 3) for name, t in timings.items()},
        },
    )
    logger.info(
        "Experiment finished",
        extra={
            "setting": config.setting,
            "seed": config.seed,
            "biased_auc": report.biased_auc,
            "pretrain_auc": report.pretrain_auc,
            "dlmia_auc": report.dlmia_auc,
            "seconds": round(total["seconds"], 3),
        },
    )
    return report


def _run_in_process(config: dict[str, Any], out_dir: str, features: dict[str, Any]) -> dict[str, Any]:
    report = run_experiment(ExperimentConfig(**config), out_dir, FeaturesSchema(**features))
    return report.model_dump(mode="json")


def run_repetitions(
    config: ExperimentConfig,
    repetitions: int,
    out_dir: str | Path,
    features: FeaturesSchema | None = None,
    workers: int = 1,
) -> RepetitionReport:
    """
    Run seeds config.seed .. config.seed + repetitions - 1, each in
    <out>/seed_<seed>, and summarize every attack's AUC.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    features = features or get_app_config().features
    out_dir = Path(out_dir)
    seeds = [config.seed + i for i in range(repetitions)]
    run_dirs = {seed: out_dir / f"seed_{seed}" for seed in seeds}
    configs = {seed: config.model_copy(update={"seed": seed}) for seed in seeds}

    reports: dict[int, ExperimentReport] = {}
    if workers <= 1 or repetitions == 1:
        for seed in seeds:
            reports[seed] = run_experiment(configs[seed], run_dirs[seed], features)
    else:
        pool = get_cpu_pool(workers)
        try:
            futures = {
                pool.submit(
                    _run_in_process,
                    configs[seed].model_dump(mode="json"),
                    str(run_dirs[seed]),
                    features.model_dump(),
                ): seed
                for seed in seeds
            }
            for future in as_completed(futures):
                reports[futures[future]] = ExperimentReport(**future.result())
        finally:
            shutdown_pools()

    ordered = [reports[seed] for seed in seeds]
    summary = RepetitionReport(
        setting=config.setting,
        defense=config.defense.enabled,
        seeds=seeds,
        runs=[artifacts.relative(out_dir, run_dirs[seed]) for seed in seeds],
        **{method: AucSummary.from_values([r.auc(method) for r in ordered]) for method in ATTACK_METHODS},
    )
    (out_dir / "repetitions.json").write_text(summary.to_json())
    logger.info(
        "Repetitions finished",
        extra={"repetitions": repetitions, **{f"{m}_mean_auc": getattr(summary, m).mean for m in ATTACK_METHODS}},
    )
    return summary
