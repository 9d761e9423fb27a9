"""
Training loops and prediction.

pretrain          joint L_bce + L_elbo with unit weights (the attack alone
                  in identity mode, which is the biased baseline)
alternating_train per outer epoch: epoch_in reweighted steps on the
                  networks, pseudo-label the target, then epoch_in score
                  refinement steps against the estimation constraint
attack_predict    member probability from deterministic features

Every step is full batch. Network parameters under attack.* use SGD with
momentum; encoder, decoder and score map use Adam. Scores take damped
Newton steps on the separable estimation objective, p moving the fraction
score_learning_rate of the way to its optimum, and are clamped to
[score_min, score_max].
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from modules.mialab.core.exceptions import NonFiniteLossError
from modules.mialab.core.logging import get_logger
from modules.mialab.dlmia.encoder import encode_features
from modules.mialab.dlmia.metrics import MetricsRecorder, monitor_auc
from modules.mialab.dlmia.objectives import (
    EstimationTargets,
    estimation_loss,
    estimation_residual,
    estimation_targets,
    pretrain_objective,
    reweighted_loss,
)
from modules.mialab.dlmia.state import AttackInputs, DlMiaState
from modules.mialab.nn.layers import Params
from modules.mialab.nn.mlp import mlp_forward
from modules.mialab.nn.optim import OptimizerSpec, OptimizerState, optimizer_step
from modules.mialab.schemas.experiment import DlMiaConfig

logger = get_logger(__name__)

_CURVATURE_FLOOR = 1e-300


@dataclass
class NetworkOptimizer:
    """SGD-momentum for attack.*, Adam for everything else."""

    attack: OptimizerSpec
    model: OptimizerSpec
    attack_state: OptimizerState = field(default_factory=OptimizerState)
    model_state: OptimizerState = field(default_factory=OptimizerState)

    @classmethod
    def from_config(cls, config: DlMiaConfig) -> "NetworkOptimizer":
        return cls(
            attack=OptimizerSpec(
                kind="sgd_momentum",
                learning_rate=config.attack_learning_rate,
                momentum=config.attack_momentum,
            ),
            model=OptimizerSpec(kind="adam", learning_rate=config.encoder_learning_rate),
        )

    def step(self, params: Params, grads: Params) -> Params:
        attack_grads = {k: v for k, v in grads.items() if k.startswith("attack.")}
        model_grads = {k: v for k, v in grads.items() if not k.startswith("attack.")}
        if attack_grads:
            params, self.attack_state = optimizer_step(self.attack, params, attack_grads, self.attack_state)
        if model_grads:
            params, self.model_state = optimizer_step(self.model, params, model_grads, self.model_state)
        return params


def _check_finite(phase: str, epoch: int, **losses: float) -> None:
    if not all(np.isfinite(v) for v in losses.values()):
        raise NonFiniteLossError(phase=phase, epoch=epoch, details=dict(losses))


def attack_probabilities(state: DlMiaState, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """(n, 2) rows of (member, non-member) probabilities."""
    probs, _ = mlp_forward(state.spec.attack, state.params, encode_features(state, x), prefix="attack.")
    return probs


def attack_predict(state: DlMiaState, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Member probability per sample; the hard label is probability >= 0.5."""
    return attack_probabilities(state, x)[:, 0]


def hard_labels(probs: NDArray[np.float64]) -> NDArray[np.int64]:
    """argmax over (member, non-member); ties count as member."""
    return (probs[:, 0] >= probs[:, 1]).astype(np.int64)


def pretrain(
    state: DlMiaState,
    inputs: AttackInputs,
    config: DlMiaConfig,
    rng: np.random.Generator,
    *,
    epochs: int | None = None,
    metrics: MetricsRecorder | None = None,
    target_labels: NDArray[np.int64] | None = None,
    phase: str = "pretrain",
) -> tuple[DlMiaState, list[float]]:
    """
    Jointly train encoder, decoder and attack with unit weights.

    target_labels, when given, only feed the monitoring AUC.

    Returns:
        (trained state, total loss per epoch before its step)

    Raises:
        NonFiniteLossError: A loss turned NaN or infinite.
    """
    epochs = config.pretrain_epochs if epochs is None else epochs
    optimizer = NetworkOptimizer.from_config(config)
    trace: list[float] = []
    for epoch in range(1, epochs + 1):
        value = pretrain_objective(state, inputs, rng=rng)
        _check_finite(phase, epoch, loss_bce=value.bce, loss_elbo=value.elbo)
        state = state.with_params(optimizer.step(state.params, value.grads))
        trace.append(value.total)
        if metrics is not None:
            metrics.record(
                phase,
                epoch,
                loss_bce=value.bce,
                loss_elbo=value.elbo if not state.spec.identity else None,
                target_auc=monitor_auc(attack_predict(state, inputs.target), target_labels),
            )
        logger.debug("Pretrain epoch", extra={"phase": phase, "epoch": epoch, "loss": value.total})
    if trace:
        logger.info(
            "Pretraining finished",
            extra={"phase": phase, "epochs": epochs, "first_loss": trace[0], "last_loss": trace[-1]},
        )
    return state, trace


def refine_scores(
    scores: NDArray[np.float64],
    delta_dis: NDArray[np.float64],
    delta_rew: NDArray[np.float64],
    step_fraction: float,
    bounds: tuple[float, float],
) -> NDArray[np.float64]:
    """
    One damped Newton step of (1/N) sum (p delta_dis - delta_rew)^2 per score,
    then clamp. The residual of every unclamped score shrinks by 1 - step_fraction.
    """
    n = scores.shape[0]
    if n == 0:
        return scores
    residual = scores * delta_dis - delta_rew
    grad = 2.0 * residual * delta_dis / n
    curvature = np.maximum(2.0 * delta_dis * delta_dis / n, _CURVATURE_FLOOR)
    return np.clip(scores - step_fraction * grad / curvature, *bounds)


@dataclass(frozen=True)
class AlternatingResult:
    state: DlMiaState
    shadow_dis: NDArray[np.float64]
    target_dis: NDArray[np.float64]
    shadow_rew: NDArray[np.float64]
    target_rew: NDArray[np.float64]
    target_probs: NDArray[np.float64]
    residuals: list[tuple[float, float]]
    trace: list[float]


def _estimation_phase(
    state: DlMiaState,
    targets: EstimationTargets,
    config: DlMiaConfig,
    outer: int,
    metrics: MetricsRecorder | None,
) -> tuple[DlMiaState, float, float]:
    bounds = (config.score_min, config.score_max)
    shadow, target = state.shadow_scores, state.target_scores
    start = estimation_residual(shadow, target, targets)
    for step in range(1, config.epoch_in + 1):
        loss, _, _ = estimation_loss(shadow, target, targets)
        _check_finite("estimate", outer, loss_est=loss)
        shadow = refine_scores(shadow, targets.shadow_dis, targets.shadow_rew, config.score_learning_rate, bounds)
        target = refine_scores(target, targets.target_dis, targets.target_rew, config.score_learning_rate, bounds)
        if metrics is not None:
            metrics.record("estimate", outer, step=step, loss_est=loss)
    end = estimation_residual(shadow, target, targets)
    return state.with_scores(shadow, target), start, end


def alternating_train(
    state: DlMiaState,
    inputs: AttackInputs,
    config: DlMiaConfig,
    rng: np.random.Generator,
    *,
    metrics: MetricsRecorder | None = None,
    target_labels: NDArray[np.int64] | None = None,
) -> AlternatingResult:
    """
    Alternate reweighted network training and truth-level score refinement.

    f_dis is the deterministic encoding by the incoming (pretrained) state
    and stays fixed; f_rew is the encoding by the current state.

    Raises:
        NonFiniteLossError: A loss turned NaN or infinite; carries phase and outer epoch.
    """
    shadow_dis = encode_features(state, inputs.shadow)
    target_dis = encode_features(state, inputs.target)
    optimizer = NetworkOptimizer.from_config(config)
    residuals: list[tuple[float, float]] = []
    trace: list[float] = []

    for outer in range(1, config.epoch_out + 1):
        for step in range(1, config.epoch_in + 1):
            value = reweighted_loss(state, inputs, rng=rng)
            _check_finite("reweight", outer, loss_bce=value.bce, loss_elbo=value.elbo)
            state = state.with_params(optimizer.step(state.params, value.grads))
            trace.append(value.total)
            if metrics is not None:
                metrics.record("reweight", outer, step=step, loss_bce=value.bce, loss_elbo=value.elbo)

        target_probs = attack_probabilities(state, inputs.target)
        pseudo_labels = hard_labels(target_probs)
        targets = estimation_targets(state, shadow_dis, target_dis, inputs, pseudo_labels)
        state, start, end = _estimation_phase(state, targets, config, outer, metrics)
        residuals.append((start, end))
        if metrics is not None:
            metrics.record(
                "outer",
                outer,
                residual_start=start,
                residual_end=end,
                target_auc=monitor_auc(target_probs[:, 0], target_labels),
            )
        logger.debug(
            "Outer epoch finished",
            extra={"outer": outer, "residual_start": start, "residual_end": end},
        )

    logger.info("Alternating training finished", extra={"outer_epochs": config.epoch_out})
    return AlternatingResult(
        state=state,
        shadow_dis=shadow_dis,
        target_dis=target_dis,
        shadow_rew=encode_features(state, inputs.shadow),
        target_rew=encode_features(state, inputs.target),
        target_probs=attack_predict(state, inputs.target),
        residuals=residuals,
        trace=trace,
    )
