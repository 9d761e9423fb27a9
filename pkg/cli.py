#!/usr/bin/env python3
"""
Recommender MIA Lab CLI.

Primary entry point for all lab operations.
Use --service to select what to run.

Usage:
    python cli.py --help
    python cli.py --service run-experiment --setting SLSL --repetitions 1 --verbose
    python cli.py --service prepare-data --out-dir data/runs/slsl
    python cli.py --service train-rec --out-dir data/runs/slsl
    python cli.py --service gen-vectors --out-dir data/runs/slsl --defense
    python cli.py --service attack --method dlmia --out-dir data/runs/slsl
    python cli.py --service verify
    python cli.py --service config --config my_run.conf
    python cli.py --service report-schema
"""

import sys
from pathlib import Path
from typing import Any

import click

PROJECT_ROOT = Path(__file__).parent
sys.path.insert(0, str(PROJECT_ROOT))

from modules.mialab.core.config import validate_project_root
from modules.mialab.core.exceptions import ApplicationError
from modules.mialab.core.logging import bind_source, get_logger, log_with_source, setup_logging

SERVICES = [
    "prepare-data",
    "train-rec",
    "gen-vectors",
    "attack",
    "run-experiment",
    "verify",
    "config",
    "report-schema",
    "info",
]


@click.command()
@click.option(
    "--service", "-s",
    type=click.Choice(SERVICES),
    default="info",
    help="Service or command to run.",
)
@click.option(
    "--verbose", "-v",
    is_flag=True,
    help="Enable verbose output (INFO level logging).",
)
@click.option(
    "--debug", "-d",
    is_flag=True,
    help="Enable debug output (DEBUG level logging).",
)
@click.option(
    "--config", "config_file",
    default=None,
    type=click.Path(exists=True, dir_okay=False),
    help="Key-value file (dotted.key = value) overriding experiment.yaml.",
)
@click.option(
    "--setting",
    default=None,
    help="Setting code, e.g. SLSL or SISL (shadow dataset/algorithm, target dataset/algorithm).",
)
@click.option(
    "--seed",
    default=None,
    type=int,
    help="Master seed.",
)
@click.option(
    "--out-dir",
    default=None,
    type=click.Path(file_okay=False),
    help="Output directory (default: MIALAB_OUTPUT_DIR or paths.output_dir/<setting>_seed<seed>).",
)
@click.option(
    "--defense/--no-defense",
    default=None,
    help="Popularity Randomization on non-member recommendations.",
)
@click.option(
    "--method",
    type=click.Choice(["biased", "pretrain", "dlmia"]),
    default="dlmia",
    help="Attack to train (attack service).",
)
@click.option(
    "--repetitions",
    default=None,
    type=int,
    help="Paired-seed repetitions (run-experiment service).",
)
@click.option(
    "--workers",
    default=None,
    type=int,
    help="Worker processes for repetitions.",
)
@click.option(
    "--check",
    "checks",
    multiple=True,
    help="Run only the named verify check (repeatable).",
)
def main(
    service: str,
    verbose: bool,
    debug: bool,
    config_file: str | None,
    setting: str | None,
    seed: int | None,
    out_dir: str | None,
    defense: bool | None,
    method: str,
    repetitions: int | None,
    workers: int | None,
    checks: tuple[str, ...],
) -> None:
    """
    Recommender MIA Lab CLI.

    Use --service to select what to run. The pipeline services
    (prepare-data, train-rec, gen-vectors, attack) each read the previous
    step's files from --out-dir; run-experiment runs them all in memory.

    \b
    Examples:
        python cli.py --service run-experiment --setting SISL --repetitions 5 --workers 4
        python cli.py --service run-experiment --defense --seed 7
        python cli.py --service prepare-data --out-dir data/runs/demo
        python cli.py --service train-rec --out-dir data/runs/demo
        python cli.py --service gen-vectors --out-dir data/runs/demo
        python cli.py --service attack --method biased --out-dir data/runs/demo
        python cli.py --service verify --check auc_oracle
        python cli.py --service config --setting MLML
        python cli.py --service report-schema
    """
    validate_project_root()

    if debug:
        log_level = "DEBUG"
    elif verbose:
        log_level = "INFO"
    else:
        log_level = "WARNING"

    setup_logging(level=log_level, format_type="console")

    bind_source("cli")

    logger = get_logger(__name__)

    logger.debug("CLI invoked", extra={"service": service, "log_level": log_level})

    overrides = {"setting": setting, "seed": seed, "defense.enabled": defense}

    try:
        if service == "prepare-data":
            run_step(logger, "prepare-data", config_file, overrides, out_dir)
        elif service == "train-rec":
            run_step(logger, "train-rec", config_file, overrides, out_dir)
        elif service == "gen-vectors":
            run_step(logger, "gen-vectors", config_file, overrides, out_dir)
        elif service == "attack":
            run_attack(logger, config_file, overrides, out_dir, method)
        elif service == "run-experiment":
            run_experiment_service(logger, config_file, overrides, out_dir, repetitions, workers)
        elif service == "verify":
            run_verify(logger, checks)
        elif service == "config":
            show_config(logger, config_file, overrides)
        elif service == "report-schema":
            show_report_schema(logger)
        elif service == "info":
            show_info(logger)
    except ApplicationError as e:
        logger.error("Command failed", extra={"service": service, "code": e.code, "error": e.message})
        click.echo(click.style(f"Error [{e.code}]: {e.message}", fg="red"), err=True)
        sys.exit(1)


def _load_config(config_file: str | None, overrides: dict[str, Any]):
    from modules.mialab.core.config import load_experiment_config

    return load_experiment_config(config_file, overrides)


def _output_dir(config, out_dir: str | None) -> Path:
    """--out-dir as given, otherwise <configured root>/<setting>_seed<seed>."""
    from modules.mialab.core.config import resolve_output_dir

    if out_dir is not None:
        return Path(out_dir)
    return resolve_output_dir(None) / f"{config.setting}_seed{config.seed}"


def run_step(logger, step: str, config_file: str | None, overrides: dict[str, Any], out_dir: str | None) -> None:
    """Run one persisted pipeline step."""
    from modules.mialab.experiments.steps import (
        generate_vectors_step,
        prepare_data_step,
        train_recommenders_step,
    )

    config = _load_config(config_file, overrides)
    target = _output_dir(config, out_dir)
    step_fn = {
        "prepare-data": prepare_data_step,
        "train-rec": train_recommenders_step,
        "gen-vectors": generate_vectors_step,
    }[step]

    logger.info("Running step", extra={"step": step, "setting": config.setting, "out_dir": str(target)})
    paths = step_fn(config, target)

    click.echo(f"{step} finished ({config.setting}, seed {config.seed}):")
    for name, path in paths.items():
        click.echo(f"  {name}: {path}")


def run_attack(
    logger, config_file: str | None, overrides: dict[str, Any], out_dir: str | None, method: str
) -> None:
    """Train and evaluate one attack on stored attack vectors."""
    from modules.mialab.experiments.steps import attack_step

    config = _load_config(config_file, overrides)
    target = _output_dir(config, out_dir)

    logger.info("Running attack", extra={"method": method, "out_dir": str(target)})
    result = attack_step(config, target, method)

    click.echo(f"Attack {method}: AUC {result.auc:.4f} ({result.samples.target} target users)")
    click.echo(f"Result written to {target / f'attack_{method}.json'}")


def run_experiment_service(
    logger,
    config_file: str | None,
    overrides: dict[str, Any],
    out_dir: str | None,
    repetitions: int | None,
    workers: int | None,
) -> None:
    """Run the full pipeline once, or over paired seeds."""
    from modules.mialab.core.config import get_app_config
    from modules.mialab.experiments.runner import run_experiment, run_repetitions

    config = _load_config(config_file, overrides)
    count = repetitions if repetitions is not None else config.repetitions
    if count < 1:
        click.echo(click.style("Error: --repetitions must be at least 1.", fg="red"), err=True)
        sys.exit(1)
    target = _output_dir(config, out_dir)

    bind_source("experiment")
    log_with_source(
        logger, "experiment", "info", "Running experiment", extra={"setting": config.setting, "repetitions": count}
    )

    if count == 1:
        report = run_experiment(config, target)
        click.echo(f"Setting {config.setting}, seed {config.seed}, defense {config.defense.enabled}:")
        click.echo(f"  biased   AUC {report.biased_auc:.4f}")
        click.echo(f"  pretrain AUC {report.pretrain_auc:.4f}")
        click.echo(f"  dlmia    AUC {report.dlmia_auc:.4f}")
        click.echo(f"Report written to {target / 'report.json'}")
        return

    pool_size = workers if workers is not None else get_app_config().concurrency.process_pool.max_workers
    summary = run_repetitions(config, count, target, workers=pool_size)
    click.echo(f"Setting {config.setting}, {count} seeds from {config.seed}, defense {config.defense.enabled}:")
    for method in ("biased", "pretrain", "dlmia"):
        auc_summary = getattr(summary, method)
        click.echo(f"  {method:<8} AUC {auc_summary.mean:.4f} ± {auc_summary.std:.4f}")
    click.echo(f"Summary written to {target / 'repetitions.json'}")


def run_verify(logger, checks: tuple[str, ...]) -> None:
    """Run the oracle-backed verification checks and print a table."""
    from rich.console import Console
    from rich.table import Table

    from modules.mialab.experiments.verify import CHECKS, run_verify_suite

    unknown = [name for name in checks if name not in CHECKS]
    if unknown:
        click.echo(click.style(f"Error: unknown check(s): {', '.join(unknown)}", fg="red"), err=True)
        click.echo(f"Available: {', '.join(CHECKS)}", err=True)
        sys.exit(1)

    bind_source("verify")
    selected = {name: CHECKS[name] for name in checks} if checks else None
    results = run_verify_suite(selected)

    table = Table(title="Verification")
    table.add_column("Check", no_wrap=True)
    table.add_column("Result", no_wrap=True)
    table.add_column("Detail")
    table.add_column("Seconds", justify="right")
    for result in results:
        status = "[green]PASS[/green]" if result.passed else "[red]FAIL[/red]"
        table.add_row(result.name, status, result.detail, f"{result.seconds:.2f}")
    Console(width=120).print(table)

    failed = [r.name for r in results if not r.passed]
    if failed:
        log_with_source(logger, "verify", "error", "Verification failed", extra={"failed": failed})
        click.echo(click.style(f"\n{len(failed)} check(s) failed.", fg="red"), err=True)
        sys.exit(1)
    click.echo(click.style("\nAll checks passed!", fg="green"))


def show_config(logger, config_file: str | None, overrides: dict[str, Any]) -> None:
    """Display application settings and the resolved experiment configuration."""
    from modules.mialab.core.config import get_app_config

    click.echo("Lab Configuration:\n")

    app_config = get_app_config()
    sections = [
        ("Application Settings (from YAML)", app_config.application.model_dump()),
        ("Logging Settings (from YAML)", app_config.logging.model_dump()),
        ("Artifact Flags (from YAML)", app_config.features.model_dump()),
        ("Concurrency (from YAML)", app_config.concurrency.model_dump()),
        ("Experiment (YAML, config file and flags)", _load_config(config_file, overrides).model_dump()),
    ]
    for title, values in sections:
        click.echo(f"{title}:")
        click.echo("-" * 40)
        _echo_tree(values, indent=2)
        click.echo()

    logger.info("Configuration displayed successfully")


def _echo_tree(values: dict[str, Any], indent: int) -> None:
    for key, value in values.items():
        if isinstance(value, dict):
            click.echo(f"{' ' * indent}{key}:")
            _echo_tree(value, indent + 2)
        else:
            click.echo(f"{' ' * indent}{key}: {value}")


def show_report_schema(logger) -> None:
    """Print the JSON schema of report.json."""
    from modules.mialab.schemas.report import report_json_schema_text

    click.echo(report_json_schema_text(), nl=False)
    logger.debug("Report schema displayed")


def show_info(logger) -> None:
    """Display application information."""
    from modules.mialab.core.config import get_app_config

    click.echo("Recommender MIA Lab")
    click.echo("=" * 40)

    app_config = get_app_config()
    click.echo(f"Name: {app_config.application.name}")
    click.echo(f"Version: {app_config.application.version}")
    click.echo(f"Description: {app_config.application.description}")

    click.echo()
    click.echo("Services (--service):")
    click.echo("  prepare-data    Load or generate datasets, filter, split")
    click.echo("  train-rec       Train shadow and target recommenders")
    click.echo("  gen-vectors     Item embeddings, recommendations, difference vectors")
    click.echo("  attack          Train one attack (--method) on stored vectors")
    click.echo("  run-experiment  Full pipeline with all three attacks")
    click.echo("  verify          Oracle-backed numerical checks")
    click.echo("  config          Display configuration")
    click.echo("  report-schema   JSON schema of report.json")
    click.echo("  info            Show this information")
    click.echo()
    click.echo("Options:")
    click.echo("  --verbose, -v   Enable INFO level logging")
    click.echo("  --debug, -d     Enable DEBUG level logging")
    click.echo()
    click.echo("Examples:")
    click.echo("  python cli.py --service run-experiment --setting SISL --repetitions 1 -v")
    click.echo("  python cli.py --service attack --method biased --out-dir data/runs/demo")
    click.echo("  python cli.py --service verify")

    logger.debug("Info displayed")


if __name__ == "__main__":
    main()
