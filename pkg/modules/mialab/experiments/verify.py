"""
Verify Suite.

Oracle-backed checks of the numerical core, run as a release gate.
Each check returns (passed, detail); an exception inside a check counts
as a failure with the exception as detail.

    bessel_series        bessel_i against an independent power series
    kl_vmf_quadrature    vMF KL against spherical quadrature (m = 3 and 8)
    kl_gaussian_mc       Gaussian KL against a Monte-Carlo estimate
    vmf_sampler          mean resultant length of the sampler against A_m(kappa)
    gradients_mlp        attack MLP gradients against central differences
    gradients_encoder    encoder, decoder and attack gradients of the joint objective
    gradients_reweight   reweighted objective including the score map
    gradients_scores     estimation-loss score gradients
    auc_oracle           sort-based AUC against the pairwise definition
    split_invariants     partition properties of a synthetic split
    biased_reduction     identity-mode training against a direct MLP loop
"""

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from modules.mialab.core.logging import get_logger
from modules.mialab.core.utils import stopwatch
from modules.mialab.data.splits import find_split_violations, make_splits
from modules.mialab.data.synthetic import generate_synthetic
from modules.mialab.dlmia.encoder import encode
from modules.mialab.dlmia.objectives import (
    EstimationTargets,
    ObjectiveNoise,
    estimation_loss,
    pretrain_objective,
    reweighted_loss,
)
from modules.mialab.dlmia.state import AttackInputs, DlMiaSpec, init_state
from modules.mialab.dlmia.training import attack_predict, pretrain
from modules.mialab.nn.gradcheck import check_gradients
from modules.mialab.nn.losses import bce_loss
from modules.mialab.nn.mlp import MlpSpec, init_mlp, mlp_backward, mlp_forward
from modules.mialab.nn.optim import OptimizerSpec, optimizer_step
from modules.mialab.numerics.distributions import kl_gaussian_rows, kl_vmf, sample_vmf_canonical
from modules.mialab.numerics.metrics import auc
from modules.mialab.numerics.special import bessel_i
from modules.mialab.schemas.experiment import DlMiaConfig

logger = get_logger(__name__)

GRADIENT_TOLERANCE = 1e-4

CheckFn = Callable[[], tuple[bool, str]]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


# =============================================================================
# Numerics
# =============================================================================


def _bessel_series(order: float, x: float, terms: int = 300) -> float:
    half = x / 2.0
    log_terms = [
        (2 * k + order) * math.log(half) - math.lgamma(k + 1) - math.lgamma(k + order + 1)
        for k in range(terms)
    ]
    peak = max(log_terms)
    return math.exp(peak) * math.fsum(math.exp(t - peak) for t in log_terms)


def check_bessel_series() -> tuple[bool, str]:
    worst = 0.0
    for order in (0.0, 0.5, 1.0, 2.5, 7.5, 15.0):
        for x in np.linspace(0.1, 50.0, 25):
            expected = _bessel_series(order, float(x))
            worst = max(worst, abs(float(bessel_i(order, x)) - expected) / expected)
    return worst < 1e-10, f"max rel err {worst:.2e}"


def _vmf_kl_quadrature(kappa: float, m: int) -> float:
    nu = m / 2.0 - 1.0
    log_c = nu * math.log(kappa) - (m / 2.0) * math.log(2.0 * math.pi) - (math.log(special.ive(nu, kappa)) + kappa)
    log_area = math.log(2.0) + (m / 2.0) * math.log(math.pi) - special.gammaln(m / 2.0)
    log_slice = math.log(2.0) + ((m - 1) / 2.0) * math.log(math.pi) - special.gammaln((m - 1) / 2.0)

    def integrand(t: float) -> float:
        log_q = log_c + kappa * t
        return math.exp(log_q + log_slice) * (1.0 - t * t) ** ((m - 3) / 2.0) * (log_q + log_area)

    value, _ = integrate.quad(integrand, -1.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    return value


def check_kl_vmf_quadrature() -> tuple[bool, str]:
    worst = 0.0
    for m in (3, 8):
        for kappa in (0.5, 2.0, 10.0, 40.0):
            value, _ = kl_vmf(kappa, m)
            worst = max(worst, abs(float(value) - _vmf_kl_quadrature(kappa, m)))
    return worst < 1e-6, f"max abs err {worst:.2e}"


def check_kl_gaussian_mc() -> tuple[bool, str]:
    mu = np.array([[0.3, -0.7]])
    log_var = np.array([[math.log(2.0), math.log(0.5)]])
    rng = np.random.default_rng(11)
    eps = rng.standard_normal((200_000, 2))
    var = np.exp(log_var[0])
    x = mu[0] + np.sqrt(var) * eps
    log_ratio = (-0.5 * np.log(var) - 0.5 * eps**2 + 0.5 * x**2).sum(axis=1)
    estimate = float(log_ratio.mean())
    tolerance = max(5e-3, 5.0 * float(log_ratio.std()) / math.sqrt(log_ratio.size))
    value = float(kl_gaussian_rows(mu, log_var)[0][0])
    return abs(value - estimate) < tolerance, f"kl {value:.5f} vs mc {estimate:.5f}"


def check_vmf_sampler() -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for kappa, m in ((1.0, 3), (10.0, 8), (50.0, 16)):
        draws = sample_vmf_canonical(np.full(100_000, kappa), m, rng)
        nu = m / 2.0 - 1.0
        expected = float(special.ive(nu + 1.0, kappa) / special.ive(nu, kappa))
        worst = max(worst, abs(float(draws[:, 0].mean()) - expected))
    return worst < 0.01, f"max |mean - A_m| {worst:.4f}"


def check_auc_oracle() -> tuple[bool, str]:
    rng = np.random.default_rng(0)
    for instance in range(200):
        n = int(rng.integers(2, 60))
        labels = rng.integers(0, 2, size=n)
        labels[0], labels[1] = 0, 1
        scores = np.round(rng.random(n), 1)
        diff = scores[labels == 1][:, None] - scores[labels == 0][None, :]
        expected = float(((diff > 0) + 0.5 * (diff == 0)).sum() / diff.size)
        if abs(auc(scores, labels) - expected) > 1e-12:
            return False, f"instance {instance} differs"
    return True, "200 instances within 1e-12"


# =============================================================================
# Gradients
# =============================================================================


def _toy():
    spec = DlMiaSpec(input_dim=3, d_inv=2, m=3, decoder_hidden=(4,), attack_hidden=(4,))
    rng = np.random.default_rng(5)
    inputs = AttackInputs(
        shadow=rng.normal(size=(4, 3)), shadow_labels=np.array([1, 0, 1, 0]), target=rng.normal(size=(3, 3))
    )
    state = init_state(spec, 4, 3, np.random.default_rng(0))
    noise = ObjectiveNoise(
        shadow=encode(state, inputs.shadow, rng=rng).noise,
        target=encode(state, inputs.target, rng=rng).noise,
    )
    return state, inputs, noise


def _gradient_verdict(report: dict[str, float]) -> tuple[bool, str]:
    worst_name = max(report, key=report.get)
    return report[worst_name] < GRADIENT_TOLERANCE, f"max rel err {report[worst_name]:.2e} ({worst_name})"


def check_gradients_mlp() -> tuple[bool, str]:
    spec = MlpSpec(layer_widths=[6, 5, 4, 2], output_head="softmax2")
    rng = np.random.default_rng(3)
    params = init_mlp(spec, rng)
    x = rng.normal(size=(8, 6))
    labels = rng.integers(0, 2, size=8)

    def loss_fn(p):
        probs, _ = mlp_forward(spec, p, x)
        return bce_loss(probs, labels)[0]

    probs, cache = mlp_forward(spec, params, x)
    grads, _ = mlp_backward(spec, params, cache, bce_loss(probs, labels)[1])
    return _gradient_verdict(check_gradients(loss_fn, params, grads))


def check_gradients_encoder() -> tuple[bool, str]:
    state, inputs, noise = _toy()
    analytic = pretrain_objective(state, inputs, noise=noise).grads
    report = check_gradients(
        lambda p: pretrain_objective(state.with_params(p), inputs, noise=noise).total, state.params, analytic
    )
    return _gradient_verdict(report)


def check_gradients_reweight() -> tuple[bool, str]:
    state, inputs, noise = _toy()
    state = state.with_scores(np.array([0.7, 1.3, 2.0, 0.9]), np.array([1.1, 0.6, 1.8]))
    params = {**state.params, "score_map.weight": np.array([0.8]), "score_map.bias": np.array([0.3])}
    state = state.with_params(params)
    analytic = reweighted_loss(state, inputs, noise=noise).grads
    report = check_gradients(
        lambda p: reweighted_loss(state.with_params(p), inputs, noise=noise).total, state.params, analytic
    )
    return _gradient_verdict(report)


def check_gradients_scores() -> tuple[bool, str]:
    rng = np.random.default_rng(8)
    targets = EstimationTargets(*(rng.uniform(0.1, 2.0, size) for size in (5, 5, 3, 3)))
    shadow, target = rng.uniform(0.5, 1.5, 5), rng.uniform(0.5, 1.5, 3)
    _, g_shadow, g_target = estimation_loss(shadow, target, targets)
    params = {"shadow": shadow, "target": target}
    report = check_gradients(
        lambda p: estimation_loss(p["shadow"], p["target"], targets)[0],
        params,
        {"shadow": g_shadow, "target": g_target},
    )
    return _gradient_verdict(report)


# =============================================================================
# Pipeline invariants
# =============================================================================


def check_split_invariants() -> tuple[bool, str]:
    bundle = make_splits(generate_synthetic(200, 40, 3, 0.2, seed=1), (0.4, 0.4, 0.2), seed=2)
    problems = find_split_violations(bundle)
    return not problems, "; ".join(problems) or "no violations"


def check_biased_reduction() -> tuple[bool, str]:
    rng = np.random.default_rng(21)
    labels = np.tile([1, 0], 10)
    inputs = AttackInputs(
        shadow=rng.normal(size=(20, 4)) + labels[:, None], shadow_labels=labels, target=rng.normal(size=(10, 4))
    )
    config = DlMiaConfig(
        d_inv=2, m=3, decoder_hidden=[4], attack_hidden=[8, 4], pretrain_epochs=10, epoch_out=0, epoch_in=0,
        encoder_learning_rate=0.001, attack_learning_rate=0.01, attack_momentum=0.7, score_learning_rate=0.2,
        score_init_low=0.9, score_init_high=1.1, score_min=0.001, score_max=1000.0, log_var_init=0.0,
        kappa_init=1.0,
    )
    spec = DlMiaSpec.from_config(config, 4, mode="identity")
    trained, _ = pretrain(init_state(spec, 20, 10, np.random.default_rng(3)), inputs, config, rng)

    params = init_mlp(spec.attack, np.random.default_rng(3), prefix="attack.")
    sgd = OptimizerSpec(kind="sgd_momentum", learning_rate=0.01, momentum=0.7)
    opt_state = None
    for _ in range(config.pretrain_epochs):
        probs, cache = mlp_forward(spec.attack, params, inputs.shadow, prefix="attack.")
        _, d_probs = bce_loss(probs, labels, np.ones(20))
        grads, _ = mlp_backward(spec.attack, params, cache, d_probs / 20)
        params, opt_state = optimizer_step(sgd, params, grads, opt_state)
    direct = mlp_forward(spec.attack, params, inputs.target, prefix="attack.")[0][:, 0]

    same = np.array_equal(attack_predict(trained, inputs.target), direct)
    return same, "bitwise identical" if same else "predictions differ"


CHECKS: dict[str, CheckFn] = {
    "bessel_series": check_bessel_series,
    "kl_vmf_quadrature": check_kl_vmf_quadrature,
    "kl_gaussian_mc": check_kl_gaussian_mc,
    "vmf_sampler": check_vmf_sampler,
    "gradients_mlp": check_gradients_mlp,
    "gradients_encoder": check_gradients_encoder,
    "gradients_reweight": check_gradients_reweight,
    "gradients_scores": check_gradients_scores,
    "auc_oracle": check_auc_oracle,
    "split_invariants": check_split_invariants,
    "biased_reduction": check_biased_reduction,
}


def run_verify_suite(checks: dict[str, CheckFn] | None = None) -> list[CheckResult]:
    """Run every check; never raises."""
    results = []
    for name, check in (checks or CHECKS).items():
        with stopwatch() as timer:
            try:
                passed, detail = check()
            except Exception as e:
                passed, detail = False, f"{type(e).__name__}: {e}"
        results.append(CheckResult(name, bool(passed), detail, timer["seconds"]))
        logger.info("Check finished", extra={"check": name, "passed": bool(passed), "detail": detail})
    return results
