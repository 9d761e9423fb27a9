"""
Unit Tests for Pipeline Stages.

Stage wrapping, data preparation and the attack ladder on the tiny
synthetic profile.
"""

import numpy as np
import pytest

from modules.mialab.core.exceptions import (
    ConfigurationError,
    DegenerateSplitError,
    ExperimentStageError,
)
from modules.mialab.dlmia.metrics import read_metrics
from modules.mialab.dlmia.state import AttackInputs
from modules.mialab.dlmia.encoder import encode_features
from modules.mialab.experiments.stages import (
    fit_embeddings,
    generate_vectors,
    load_source,
    prepare_data,
    run_attacks,
    run_biased,
    stage,
    train_recommenders,
)


class TestStage:
    """Tests for the stage context manager."""

    def test_wraps_application_errors_with_stage_name(self):
        with pytest.raises(ExperimentStageError) as exc_info:
            with stage("prepare_data"):
                raise DegenerateSplitError("target members empty")

        assert exc_info.value.stage == "prepare_data"
        assert exc_info.value.code == "EXP_STAGE_FAILED"
        assert isinstance(exc_info.value.cause, DegenerateSplitError)

    def test_does_not_double_wrap(self):
        inner = ExperimentStageError("attack", ConfigurationError("bad"))
        with pytest.raises(ExperimentStageError) as exc_info:
            with stage("outer"):
                raise inner
        assert exc_info.value is inner

    def test_other_exceptions_pass_through(self):
        with pytest.raises(KeyError):
            with stage("attack"):
                raise KeyError("missing")

    def test_yields_timer(self):
        with stage("noop") as timer:
            pass
        assert timer["seconds"] >= 0.0


class TestDataStages:
    """Tests for dataset loading and splitting."""

    def test_file_dataset_without_path_is_a_configuration_error(self, tiny_config_factory):
        config = tiny_config_factory(setting="ML")
        with pytest.raises(ConfigurationError, match="movielens"):
            load_source(config, "movielens")

    def test_alternate_synthetic_differs_from_primary(self, tiny_config):
        primary = load_source(tiny_config, "synthetic")
        alternate = load_source(tiny_config, "synthetic_alt")
        assert not primary.equals(alternate)

    def test_shared_dataset_gets_one_bundle(self, tiny_config):
        data = prepare_data(tiny_config)
        assert list(data.bundles) == ["synthetic"]
        assert not data.cross_dataset
        assert data.bundle("shadow") is data.bundle("target")

    def test_cross_dataset_gets_a_bundle_each(self, tiny_config_factory):
        data = prepare_data(tiny_config_factory(setting="SLTL"))
        assert list(data.bundles) == ["synthetic", "synthetic_alt"]
        assert data.cross_dataset
        assert data.bundle("target") is data.bundles["synthetic_alt"]

    def test_same_seed_same_split(self, tiny_config):
        assert prepare_data(tiny_config).bundle("shadow").equals(prepare_data(tiny_config).bundle("shadow"))


@pytest.fixture(scope="module")
def tiny_attack_inputs(tiny_config_factory):
    """Attack inputs from the tiny profile, built once for the module."""
    config = tiny_config_factory()
    data = prepare_data(config)
    models = train_recommenders(config, data)
    dataset = generate_vectors(config, data, fit_embeddings(config, data), models)
    return config, AttackInputs.from_samples(dataset.shadow, dataset.target), dataset.target_labels


class TestAttackStages:
    """Tests for the biased / pretrain / dlmia ladder."""

    def test_biased_is_deterministic(self, tiny_attack_inputs):
        config, inputs, labels = tiny_attack_inputs
        first = run_biased(config, inputs, labels)
        second = run_biased(config, inputs, labels)
        np.testing.assert_array_equal(first.target_probs, second.target_probs)
        assert first.state.spec.identity

    def test_ladder_reports_every_method(self, tiny_attack_inputs, tmp_path):
        config, inputs, labels = tiny_attack_inputs

        outcomes = run_attacks(config, inputs, labels, metrics_dir=tmp_path)

        assert list(outcomes) == ["biased", "pretrain", "dlmia"]
        for outcome in outcomes.values():
            assert 0.0 <= outcome.auc <= 1.0
            assert outcome.target_probs.shape == (inputs.target.shape[0],)

    def test_dlmia_continues_from_pretrain(self, tiny_attack_inputs, tmp_path):
        config, inputs, labels = tiny_attack_inputs

        outcomes = run_attacks(config, inputs, labels, metrics_dir=tmp_path)

        dis = outcomes["dlmia"].alternating.target_dis
        np.testing.assert_array_equal(dis, encode_features(outcomes["pretrain"].state, inputs.target))
        assert outcomes["dlmia"].trace[: config.dlmia.pretrain_epochs] == outcomes["pretrain"].trace

    def test_metrics_files(self, tiny_attack_inputs, tmp_path):
        config, inputs, labels = tiny_attack_inputs

        run_attacks(config, inputs, labels, metrics_dir=tmp_path)

        biased = read_metrics(tmp_path / "metrics_biased.jsonl")
        dlmia = read_metrics(tmp_path / "metrics_dlmia.jsonl")
        assert {r["phase"] for r in biased} == {"biased"}
        assert all("loss_elbo" not in r for r in biased)
        assert {"pretrain", "reweight", "estimate", "outer"} <= {r["phase"] for r in dlmia}
        assert len([r for r in dlmia if r["phase"] == "outer"]) == config.dlmia.epoch_out
