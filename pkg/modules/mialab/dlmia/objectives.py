"""
Training objectives with analytic gradients.

With N_s shadow and N_t target samples and per-sample weights w:

    L_bce  = (1/N_s) sum_shadow w_i bce(A(f_dis_i), y_i)
    L_elbo = (1/N_s) sum_shadow w_i nelbo_i + (1/N_t) sum_target w_i nelbo_i
    nelbo  = 1/2 |decoder(f_dis) - diff|^2 + KL_gauss + KL_vmf

Pretraining uses w = 1. Reweighted training uses w = relu(a p + b), the
score map applied to the truth-level scores p. The estimation constraint
refines p alone:

    L_est = sum_j (1/N_j) sum_i (p_i delta_dis_i - delta_rew_i)^2
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from modules.mialab.dlmia.encoder import EncoderNoise, encode, encode_features, encoder_backward
from modules.mialab.dlmia.state import AttackInputs, DlMiaState
from modules.mialab.nn.layers import Params
from modules.mialab.nn.losses import bce_loss, bce_terms, squared_error_rows
from modules.mialab.nn.mlp import mlp_backward, mlp_forward

SCORE_DENOMINATOR_FLOOR = 1e-8


@dataclass(frozen=True)
class ObjectiveValue:
    bce: float
    elbo: float
    grads: Params
    shadow_weight_grads: NDArray[np.float64]
    target_weight_grads: NDArray[np.float64]

    @property
    def total(self) -> float:
        return self.bce + self.elbo


@dataclass(frozen=True)
class ObjectiveNoise:
    shadow: EncoderNoise | None = None
    target: EncoderNoise | None = None


def _accumulate(total: Params, grads: Params) -> None:
    for name, grad in grads.items():
        total[name] = total[name] + grad if name in total else grad


def joint_objective(
    state: DlMiaState,
    inputs: AttackInputs,
    shadow_weights: NDArray[np.float64],
    target_weights: NDArray[np.float64],
    rng: np.random.Generator | None = None,
    noise: ObjectiveNoise | None = None,
) -> ObjectiveValue:
    """
    L_bce + L_elbo and gradients w.r.t. every network parameter and every weight.

    Both terms are normalized per origin: shadow sums are scaled by 1/N_s and
    target sums by 1/N_t, where the plain formulation sums over samples. The
    loss is thus a per-sample mean and does not grow with the dataset, and a
    target set of a different size does not change the shadow/target balance.

    The same stochastic encoding of a shadow sample feeds the attack and the
    decoder. In identity mode there is no ELBO and the attack reads the diffs.
    """
    spec = state.spec
    params = state.params
    noise = noise or ObjectiveNoise()
    n_s, n_t = inputs.shadow.shape[0], inputs.target.shape[0]
    grads: Params = {}
    shadow_weight_grads = np.zeros(n_s)
    target_weight_grads = np.zeros(n_t)

    if spec.identity:
        probs, cache = mlp_forward(spec.attack, params, inputs.shadow, prefix="attack.")
        bce_value, d_probs = bce_loss(probs, inputs.shadow_labels, shadow_weights)
        attack_grads, _ = mlp_backward(spec.attack, params, cache, d_probs / n_s)
        grads.update(attack_grads)
        shadow_weight_grads = bce_terms(probs, inputs.shadow_labels) / n_s
        return ObjectiveValue(bce_value / n_s, 0.0, grads, shadow_weight_grads, target_weight_grads)

    bce_value = 0.0
    elbo_value = 0.0
    for origin, x, weights, origin_noise in (
        ("shadow", inputs.shadow, shadow_weights, noise.shadow),
        ("target", inputs.target, target_weights, noise.target),
    ):
        n = x.shape[0]
        if n == 0:
            continue
        scale = weights / n
        out = encode(state, x, rng=rng, noise=origin_noise)
        features = out.f_dis

        recon, dec_cache = mlp_forward(spec.decoder, params, features, prefix="decoder.")
        recon_terms, residual = squared_error_rows(recon, x)
        nelbo = recon_terms + out.kl_inv + out.kl_spe
        elbo_value += float((scale * nelbo).sum())
        dec_grads, d_features = mlp_backward(spec.decoder, params, dec_cache, residual * scale[:, None])
        _accumulate(grads, dec_grads)
        weight_grads = nelbo / n

        if origin == "shadow":
            probs, att_cache = mlp_forward(spec.attack, params, features, prefix="attack.")
            raw_bce, d_probs = bce_loss(probs, inputs.shadow_labels, weights)
            bce_value += raw_bce / n
            att_grads, d_att_features = mlp_backward(spec.attack, params, att_cache, d_probs / n)
            _accumulate(grads, att_grads)
            d_features = d_features + d_att_features
            weight_grads = weight_grads + bce_terms(probs, inputs.shadow_labels) / n
            shadow_weight_grads = weight_grads
        else:
            target_weight_grads = weight_grads

        enc_grads = encoder_backward(
            state, out, d_features[:, : spec.d_inv], d_features[:, spec.d_inv:], scale, scale
        )
        _accumulate(grads, enc_grads)

    return ObjectiveValue(bce_value, elbo_value, grads, shadow_weight_grads, target_weight_grads)


def pretrain_objective(
    state: DlMiaState,
    inputs: AttackInputs,
    rng: np.random.Generator | None = None,
    noise: ObjectiveNoise | None = None,
) -> ObjectiveValue:
    """L_bce + L_elbo with every weight 1."""
    return joint_objective(
        state, inputs, np.ones(inputs.shadow.shape[0]), np.ones(inputs.target.shape[0]), rng, noise
    )


def score_weights(state: DlMiaState, scores: NDArray[np.float64]) -> NDArray[np.float64]:
    """w = relu(a p + b)."""
    pre = state.params["score_map.weight"][0] * scores + state.params["score_map.bias"][0]
    return np.maximum(pre, 0.0)


def sample_scores(
    state: DlMiaState,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """(shadow scores, shadow weights, target scores, target weights) of a state."""
    return (
        state.shadow_scores,
        score_weights(state, state.shadow_scores),
        state.target_scores,
        score_weights(state, state.target_scores),
    )


def reweighted_loss(
    state: DlMiaState,
    inputs: AttackInputs,
    rng: np.random.Generator | None = None,
    noise: ObjectiveNoise | None = None,
) -> ObjectiveValue:
    """
    Weighted L_bce + L_elbo with w from the score map; gradients include the
    score map parameters. The scores themselves get no gradient here.
    """
    shadow_w = score_weights(state, state.shadow_scores)
    target_w = score_weights(state, state.target_scores)
    value = joint_objective(state, inputs, shadow_w, target_w, rng, noise)

    grads = dict(value.grads)
    d_weight = 0.0
    d_bias = 0.0
    for scores, weight_grads in (
        (state.shadow_scores, value.shadow_weight_grads),
        (state.target_scores, value.target_weight_grads),
    ):
        pre = state.params["score_map.weight"][0] * scores + state.params["score_map.bias"][0]
        active = pre > 0.0
        d_weight += float((weight_grads * scores * active).sum())
        d_bias += float((weight_grads * active).sum())
    grads["score_map.weight"] = np.array([d_weight])
    grads["score_map.bias"] = np.array([d_bias])
    return ObjectiveValue(value.bce, value.elbo, grads, value.shadow_weight_grads, value.target_weight_grads)


def truth_score(
    probs_dis: NDArray[np.float64], probs_truth: NDArray[np.float64], labels: NDArray[np.int64]
) -> NDArray[np.float64]:
    """p = bce(truth) / bce(dis), the denominator floored at 1e-8."""
    numerator = bce_terms(probs_truth, labels)
    denominator = np.maximum(bce_terms(probs_dis, labels), SCORE_DENOMINATOR_FLOOR)
    return numerator / denominator


def estimation_terms(
    scores: NDArray[np.float64], delta_dis: NDArray[np.float64], delta_rew: NDArray[np.float64]
) -> tuple[float, NDArray[np.float64], NDArray[np.float64]]:
    """
    One origin's (1/N) sum (p delta_dis - delta_rew)^2.

    Returns:
        (loss, d loss / d scores, residuals p delta_dis - delta_rew)
    """
    n = scores.shape[0]
    if n == 0:
        return 0.0, np.zeros(0), np.zeros(0)
    residual = scores * delta_dis - delta_rew
    return float((residual * residual).sum() / n), 2.0 * residual * delta_dis / n, residual


@dataclass(frozen=True)
class EstimationTargets:
    """Per-sample delta_dis and delta_rew under the current attack, frozen for a phase."""

    shadow_dis: NDArray[np.float64]
    shadow_rew: NDArray[np.float64]
    target_dis: NDArray[np.float64]
    target_rew: NDArray[np.float64]


def estimation_targets(
    state: DlMiaState,
    shadow_dis: NDArray[np.float64],
    target_dis: NDArray[np.float64],
    inputs: AttackInputs,
    pseudo_labels: NDArray[np.int64],
) -> EstimationTargets:
    """
    Attack losses of the pre-reweighting features f_dis and the current
    features f_rew; shadow uses true labels, target the pseudo labels.
    """
    spec = state.spec
    deltas = []
    for dis, x, labels in (
        (shadow_dis, inputs.shadow, inputs.shadow_labels),
        (target_dis, inputs.target, pseudo_labels),
    ):
        probs_dis, _ = mlp_forward(spec.attack, state.params, dis, prefix="attack.")
        probs_rew, _ = mlp_forward(spec.attack, state.params, encode_features(state, x), prefix="attack.")
        deltas.append((bce_terms(probs_dis, labels), bce_terms(probs_rew, labels)))
    (s_dis, s_rew), (t_dis, t_rew) = deltas
    return EstimationTargets(shadow_dis=s_dis, shadow_rew=s_rew, target_dis=t_dis, target_rew=t_rew)


def estimation_loss(
    shadow_scores: NDArray[np.float64],
    target_scores: NDArray[np.float64],
    targets: EstimationTargets,
) -> tuple[float, NDArray[np.float64], NDArray[np.float64]]:
    """L_est and its gradients w.r.t. the shadow and target scores."""
    shadow_loss, shadow_grad, _ = estimation_terms(shadow_scores, targets.shadow_dis, targets.shadow_rew)
    target_loss, target_grad, _ = estimation_terms(target_scores, targets.target_dis, targets.target_rew)
    return shadow_loss + target_loss, shadow_grad, target_grad


def estimation_residual(
    shadow_scores: NDArray[np.float64],
    target_scores: NDArray[np.float64],
    targets: EstimationTargets,
) -> float:
    """Mean |p delta_dis - delta_rew| over all samples."""
    _, _, shadow_res = estimation_terms(shadow_scores, targets.shadow_dis, targets.shadow_rew)
    _, _, target_res = estimation_terms(target_scores, targets.target_dis, targets.target_rew)
    return float(np.abs(np.concatenate([shadow_res, target_res])).mean())
