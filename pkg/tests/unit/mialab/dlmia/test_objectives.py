"""
Unit Tests for the Training Objectives.

Network gradients are checked against central differences with the sampler
noise frozen; score gradients against central differences of the
estimation loss.
"""

import numpy as np
import pytest

from modules.mialab.dlmia.encoder import EncoderNoise, encode
from modules.mialab.dlmia.objectives import (
    EstimationTargets,
    ObjectiveNoise,
    estimation_loss,
    estimation_residual,
    joint_objective,
    pretrain_objective,
    reweighted_loss,
    score_weights,
    truth_score,
)
from modules.mialab.dlmia.state import AttackInputs
from modules.mialab.nn.gradcheck import check_gradients
from modules.mialab.nn.losses import squared_error_rows
from modules.mialab.nn.mlp import mlp_forward


def _zero_posterior_state(state):
    """Encoder outputs mu = 0, log_var = 0, kappa ~ 0 and the decoder outputs 0."""
    params = dict(state.params)
    for name in ("encoder.gaussian.weight", "encoder.gaussian.bias", "encoder.vmf.weight"):
        params[name] = np.zeros_like(params[name])
    vmf_bias = np.zeros_like(params["encoder.vmf.bias"])
    vmf_bias[0] = 1.0
    vmf_bias[-1] = -1000.0
    params["encoder.vmf.bias"] = vmf_bias
    last = state.spec.decoder.n_layers - 1
    params[f"decoder.layer{last}.weight"] = np.zeros_like(params[f"decoder.layer{last}.weight"])
    params[f"decoder.layer{last}.bias"] = np.zeros_like(params[f"decoder.layer{last}.bias"])
    return state.with_params(params)


def _target_only(target: np.ndarray) -> AttackInputs:
    return AttackInputs(
        shadow=np.zeros((0, target.shape[1])), shadow_labels=np.zeros(0, dtype=np.int64), target=target
    )


def _zero_noise(n: int) -> ObjectiveNoise:
    return ObjectiveNoise(target=EncoderNoise.deterministic(n, 2, 3))


class TestElbo:
    """Tests for the negative ELBO part of the joint objective."""

    def test_perfect_reconstruction_and_zero_kl_is_zero(self, toy_state):
        state = _zero_posterior_state(toy_state)
        inputs = _target_only(np.zeros((2, 3)))

        value = joint_objective(state, inputs, np.ones(0), np.ones(2), noise=_zero_noise(2))

        assert value.elbo == 0.0
        assert value.bce == 0.0

    def test_doubling_diff_quadruples_reconstruction(self, toy_state):
        state = _zero_posterior_state(toy_state)
        x = np.array([[1.0, -2.0, 0.5], [0.3, 0.0, 1.0]])

        single = joint_objective(state, _target_only(x), np.ones(0), np.ones(2), noise=_zero_noise(2))
        double = joint_objective(state, _target_only(2.0 * x), np.ones(0), np.ones(2), noise=_zero_noise(2))

        assert single.elbo == pytest.approx(0.5 * (x * x).sum() / 2)
        assert double.elbo == pytest.approx(4.0 * single.elbo)

    def test_duplicated_samples_leave_the_loss_unchanged(self, toy_state, toy_inputs):
        """Per-origin means: repeating every target row twice changes neither term."""
        doubled = AttackInputs(
            shadow=toy_inputs.shadow,
            shadow_labels=toy_inputs.shadow_labels,
            target=np.vstack([toy_inputs.target, toy_inputs.target]),
        )

        def value(inputs):
            n_s, n_t = inputs.shadow.shape[0], inputs.target.shape[0]
            noise = ObjectiveNoise(
                shadow=EncoderNoise.deterministic(n_s, 2, 3), target=EncoderNoise.deterministic(n_t, 2, 3)
            )
            return joint_objective(toy_state, inputs, np.ones(n_s), np.ones(n_t), noise=noise)

        single, double = value(toy_inputs), value(doubled)

        assert double.bce == pytest.approx(single.bce, rel=1e-12)
        assert double.elbo == pytest.approx(single.elbo, rel=1e-12)
        for name, grad in single.grads.items():
            np.testing.assert_allclose(double.grads[name], grad, rtol=1e-10, atol=1e-14)

    def test_gradients_match_finite_differences(self, toy_state, toy_inputs, frozen_noise):
        def loss_fn(params):
            return pretrain_objective(toy_state.with_params(params), toy_inputs, noise=frozen_noise).total

        analytic = pretrain_objective(toy_state, toy_inputs, noise=frozen_noise).grads

        report = check_gradients(loss_fn, toy_state.params, analytic)

        assert {name.split(".")[0] for name in report} == {"encoder", "decoder", "attack"}
        assert max(report.values()) < 1e-4

    def test_weight_gradients_match_finite_differences(self, toy_state, toy_inputs, frozen_noise):
        w_s = np.array([0.5, 1.0, 1.5, 2.0])
        w_t = np.array([1.0, 0.25, 3.0])
        value = joint_objective(toy_state, toy_inputs, w_s, w_t, noise=frozen_noise)

        h = 1e-6
        for index in range(w_t.size):
            plus, minus = w_t.copy(), w_t.copy()
            plus[index] += h
            minus[index] -= h
            numeric = (
                joint_objective(toy_state, toy_inputs, w_s, plus, noise=frozen_noise).total
                - joint_objective(toy_state, toy_inputs, w_s, minus, noise=frozen_noise).total
            ) / (2 * h)
            assert value.target_weight_grads[index] == pytest.approx(numeric, rel=1e-6, abs=1e-9)
        for index in range(w_s.size):
            plus, minus = w_s.copy(), w_s.copy()
            plus[index] += h
            minus[index] -= h
            numeric = (
                joint_objective(toy_state, toy_inputs, plus, w_t, noise=frozen_noise).total
                - joint_objective(toy_state, toy_inputs, minus, w_t, noise=frozen_noise).total
            ) / (2 * h)
            assert value.shadow_weight_grads[index] == pytest.approx(numeric, rel=1e-6, abs=1e-9)

    def test_mc_estimate_has_small_standard_error(self, toy_state):
        x = np.tile(np.array([[0.4, -1.2, 0.7]]), (10_000, 1))
        out = encode(toy_state, x, rng=np.random.default_rng(17))
        recon, _ = mlp_forward(toy_state.spec.decoder, toy_state.params, out.f_dis, prefix="decoder.")
        terms, _ = squared_error_rows(recon, x)
        nelbo = terms + out.kl_inv + out.kl_spe

        standard_error = nelbo.std(ddof=1) / np.sqrt(nelbo.size)

        assert standard_error < 0.01 * nelbo.mean()


class TestReweightedLoss:
    """Tests for the score-weighted objective."""

    def test_unit_weights_reduce_to_pretraining(self, toy_state, toy_inputs, frozen_noise):
        state = toy_state.with_scores(np.ones(4), np.ones(3))

        reweighted = reweighted_loss(state, toy_inputs, noise=frozen_noise)
        pretrain = pretrain_objective(state, toy_inputs, noise=frozen_noise)

        assert reweighted.bce == pytest.approx(pretrain.bce)
        assert reweighted.elbo == pytest.approx(pretrain.elbo)
        for name, grad in pretrain.grads.items():
            np.testing.assert_allclose(reweighted.grads[name], grad, rtol=1e-12)

    def test_zero_weight_sample_contributes_nothing(self, toy_state, toy_inputs, frozen_noise):
        w_s = np.array([0.0, 1.0, 1.0, 1.0])
        w_t = np.ones(3)
        shadow = toy_inputs.shadow.copy()
        shadow[0] = [5.0, -4.0, 3.0]
        moved = AttackInputs(
            shadow=shadow,
            shadow_labels=np.array([0, *toy_inputs.shadow_labels[1:]]),
            target=toy_inputs.target,
        )

        base = joint_objective(toy_state, toy_inputs, w_s, w_t, noise=frozen_noise)
        changed = joint_objective(toy_state, moved, w_s, w_t, noise=frozen_noise)

        assert changed.bce == pytest.approx(base.bce, rel=1e-12)
        assert changed.elbo == pytest.approx(base.elbo, rel=1e-12)
        for name, grad in base.grads.items():
            np.testing.assert_allclose(changed.grads[name], grad, rtol=1e-9, atol=1e-15)

    def test_rectified_weights(self, toy_state):
        params = dict(toy_state.params)
        params["score_map.bias"] = np.array([-1.0])
        state = toy_state.with_params(params)

        np.testing.assert_array_equal(score_weights(state, np.array([0.5, 1.0, 3.0])), [0.0, 0.0, 2.0])

    def test_gradients_include_score_map(self, toy_state, toy_inputs, frozen_noise):
        state = toy_state.with_scores(np.array([0.7, 1.3, 2.0, 0.9]), np.array([1.1, 0.6, 1.8]))
        params = dict(state.params)
        params["score_map.weight"] = np.array([0.8])
        params["score_map.bias"] = np.array([0.3])
        state = state.with_params(params)

        def loss_fn(p):
            return reweighted_loss(state.with_params(p), toy_inputs, noise=frozen_noise).total

        analytic = reweighted_loss(state, toy_inputs, noise=frozen_noise).grads

        report = check_gradients(loss_fn, state.params, analytic)

        assert "score_map.weight" in report and "score_map.bias" in report
        assert max(report.values()) < 1e-4


class TestTruthScore:
    """Tests for the ratio of attack losses."""

    def test_identical_inputs_give_one(self):
        probs = np.array([[0.7, 0.3], [0.2, 0.8]])
        np.testing.assert_allclose(truth_score(probs, probs, np.array([1, 1])), [1.0, 1.0])

    def test_ratio(self):
        dis = np.array([[0.5, 0.5]])
        truth = np.array([[0.25, 0.75]])
        np.testing.assert_allclose(truth_score(dis, truth, np.array([1])), [2.0])

    def test_denominator_is_floored(self):
        dis = np.array([[1.0, 0.0]])
        truth = np.array([[0.5, 0.5]])

        score = truth_score(dis, truth, np.array([1]))

        assert np.isfinite(score).all()
        assert score[0] == pytest.approx(np.log(2.0) / 1e-8)


class TestEstimationLoss:
    """Tests for the estimation constraint over truth-level scores."""

    @staticmethod
    def _targets(shadow_dis, shadow_rew, target_dis=(), target_rew=()):
        return EstimationTargets(
            shadow_dis=np.asarray(shadow_dis, dtype=float),
            shadow_rew=np.asarray(shadow_rew, dtype=float),
            target_dis=np.asarray(target_dis, dtype=float),
            target_rew=np.asarray(target_rew, dtype=float),
        )

    def test_single_shadow_sample(self):
        loss, _, _ = estimation_loss(np.array([1.0]), np.zeros(0), self._targets([0.5], [0.25]))
        assert loss == pytest.approx(0.0625)

    def test_exact_scores_give_zero(self):
        targets = self._targets([0.5, 2.0], [0.25, 1.0], [0.4], [1.2])
        shadow = targets.shadow_rew / targets.shadow_dis
        target = targets.target_rew / targets.target_dis

        loss, _, _ = estimation_loss(shadow, target, targets)

        assert loss == pytest.approx(0.0, abs=1e-15)
        assert estimation_residual(shadow, target, targets) == pytest.approx(0.0, abs=1e-15)

    def test_origins_are_normalized_separately(self):
        targets = self._targets([1.0, 1.0], [0.0, 0.0], [1.0], [0.0])

        loss, _, _ = estimation_loss(np.array([1.0, 1.0]), np.array([1.0]), targets)

        assert loss == pytest.approx(2.0)

    def test_score_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(8)
        targets = self._targets(
            rng.uniform(0.1, 2, 5), rng.uniform(0.1, 2, 5), rng.uniform(0.1, 2, 3), rng.uniform(0.1, 2, 3)
        )
        shadow = rng.uniform(0.5, 1.5, 5)
        target = rng.uniform(0.5, 1.5, 3)
        _, g_shadow, g_target = estimation_loss(shadow, target, targets)

        h = 1e-5
        for scores, grads, which in ((shadow, g_shadow, "shadow"), (target, g_target, "target")):
            for index in range(scores.size):
                plus, minus = scores.copy(), scores.copy()
                plus[index] += h
                minus[index] -= h
                if which == "shadow":
                    up = estimation_loss(plus, target, targets)[0]
                    down = estimation_loss(minus, target, targets)[0]
                else:
                    up = estimation_loss(shadow, plus, targets)[0]
                    down = estimation_loss(shadow, minus, targets)[0]
                numeric = (up - down) / (2 * h)
                assert abs(grads[index] - numeric) <= 1e-6 * max(abs(grads[index]) + abs(numeric), 1e-6)
