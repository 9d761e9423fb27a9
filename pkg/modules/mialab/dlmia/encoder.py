"""
Disentangled encoder.

Two linear heads read the difference vector:

    gaussian head  -> mu, log_var             f_inv = mu + exp(log_var / 2) * eps
    vmf head       -> direction r, rho        mu_dir = r / |r|,  kappa = softplus(rho)
                                              f_spe = H(mu_dir) z,  z ~ vMF(e1, kappa)

H is the Householder reflection taking e1 to mu_dir. Gradients reach mu_dir
through H; kappa gets gradient from its KL term only (the rejection-sampled
z is treated as a constant). Sampler noise can be passed in, which makes
the forward pass a deterministic function of the parameters.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import expit

from modules.mialab.core.exceptions import ShapeMismatchError
from modules.mialab.dlmia.state import DlMiaState
from modules.mialab.nn.layers import Params, linear_backward, linear_forward
from modules.mialab.numerics.distributions import (
    householder_rotate,
    kl_gaussian_rows,
    kl_vmf,
    sample_vmf_canonical,
)

_NORM_FLOOR = 1e-12
_HOUSEHOLDER_EPS = 1e-24


@dataclass(frozen=True)
class EncoderNoise:
    """Standard-normal eps (n, d_inv) and canonical vMF draws z (n, m) around e1."""

    eps: NDArray[np.float64]
    canonical: NDArray[np.float64]

    @classmethod
    def deterministic(cls, n: int, d_inv: int, m: int) -> "EncoderNoise":
        """Zero Gaussian noise and z = e1, so f_inv = mu and f_spe = mu_dir."""
        canonical = np.zeros((n, m))
        canonical[:, 0] = 1.0
        return cls(eps=np.zeros((n, d_inv)), canonical=canonical)


@dataclass(frozen=True)
class EncoderOutput:
    x: NDArray[np.float64]
    mu: NDArray[np.float64]
    log_var: NDArray[np.float64]
    direction: NDArray[np.float64]
    direction_norm: NDArray[np.float64]
    mu_dir: NDArray[np.float64]
    rho: NDArray[np.float64]
    kappa: NDArray[np.float64]
    noise: EncoderNoise
    f_inv: NDArray[np.float64]
    f_spe: NDArray[np.float64]
    kl_inv: NDArray[np.float64]
    kl_spe: NDArray[np.float64]
    kl_inv_grad_mu: NDArray[np.float64]
    kl_inv_grad_log_var: NDArray[np.float64]
    kl_spe_grad_kappa: NDArray[np.float64]

    @property
    def f_dis(self) -> NDArray[np.float64]:
        return np.hstack([self.f_inv, self.f_spe])


def softplus(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.logaddexp(0.0, x)


def encode(
    state: DlMiaState,
    x: NDArray[np.float64],
    rng: np.random.Generator | None = None,
    noise: EncoderNoise | None = None,
    deterministic: bool = False,
) -> EncoderOutput:
    """
    Encode a batch of difference vectors.

    Noise precedence: deterministic, then the given noise, then fresh draws
    from rng.

    Raises:
        ShapeMismatchError: Wrong input width or noise shape.
        ValueError: No noise source for a stochastic encode.
    """
    spec = state.spec
    params = state.params
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ShapeMismatchError(f"encoder expects width {spec.input_dim}, got {x.shape}")
    n, d, m = x.shape[0], spec.d_inv, spec.m

    gaussian = linear_forward(x, params["encoder.gaussian.weight"], params["encoder.gaussian.bias"])
    mu, log_var = gaussian[:, :d], gaussian[:, d:]
    vmf = linear_forward(x, params["encoder.vmf.weight"], params["encoder.vmf.bias"])
    direction, rho = vmf[:, :m], vmf[:, m]
    norm = np.maximum(np.linalg.norm(direction, axis=1), _NORM_FLOOR)
    mu_dir = direction / norm[:, None]
    kappa = softplus(rho)

    if deterministic:
        noise = EncoderNoise.deterministic(n, d, m)
    elif noise is None:
        if rng is None:
            raise ValueError("stochastic encode needs rng or noise")
        noise = EncoderNoise(
            eps=rng.standard_normal((n, d)),
            canonical=sample_vmf_canonical(kappa, m, rng),
        )
    if noise.eps.shape != (n, d) or noise.canonical.shape != (n, m):
        raise ShapeMismatchError("encoder noise does not match the batch")

    f_inv = mu + np.exp(0.5 * log_var) * noise.eps
    f_spe = householder_rotate(mu_dir, noise.canonical)
    kl_inv, grad_mu, grad_log_var = kl_gaussian_rows(mu, log_var)
    kl_spe, grad_kappa = kl_vmf(kappa, m)

    return EncoderOutput(
        x=x,
        mu=mu,
        log_var=log_var,
        direction=direction,
        direction_norm=norm,
        mu_dir=mu_dir,
        rho=rho,
        kappa=kappa,
        noise=noise,
        f_inv=f_inv,
        f_spe=f_spe,
        kl_inv=np.asarray(kl_inv),
        kl_spe=np.asarray(kl_spe),
        kl_inv_grad_mu=grad_mu,
        kl_inv_grad_log_var=grad_log_var,
        kl_spe_grad_kappa=np.asarray(grad_kappa),
    )


def _householder_vjp(
    mu_dir: NDArray[np.float64], z: NDArray[np.float64], upstream: NDArray[np.float64]
) -> NDArray[np.float64]:
    """d (g . H(mu) z) / d mu, row-wise, with u = e1 - mu."""
    u = -mu_dir.copy()
    u[:, 0] += 1.0
    q = (u * u).sum(axis=1)
    active = q > _HOUSEHOLDER_EPS
    safe_q = np.where(active, q, 1.0)
    s = 2.0 / safe_q
    p = (u * z).sum(axis=1)
    gu = (upstream * u).sum(axis=1)
    d_u = (
        (4.0 * p * gu / (safe_q * safe_q))[:, None] * u
        - (s * gu)[:, None] * z
        - (s * p)[:, None] * upstream
    )
    return np.where(active[:, None], -d_u, 0.0)


def encoder_backward(
    state: DlMiaState,
    out: EncoderOutput,
    grad_f_inv: NDArray[np.float64],
    grad_f_spe: NDArray[np.float64],
    grad_kl_inv: NDArray[np.float64],
    grad_kl_spe: NDArray[np.float64],
) -> Params:
    """
    Parameter gradients of the encoder heads.

    Args:
        grad_f_inv, grad_f_spe: d loss / d feature, shape (n, d_inv) and (n, m).
        grad_kl_inv, grad_kl_spe: d loss / d per-row KL, shape (n,).
    """
    params = state.params
    std = np.exp(0.5 * out.log_var)

    d_mu = grad_f_inv + grad_kl_inv[:, None] * out.kl_inv_grad_mu
    d_log_var = grad_f_inv * out.noise.eps * 0.5 * std + grad_kl_inv[:, None] * out.kl_inv_grad_log_var
    d_gaussian = np.hstack([d_mu, d_log_var])

    d_mu_dir = _householder_vjp(out.mu_dir, out.noise.canonical, grad_f_spe)
    radial = (d_mu_dir * out.mu_dir).sum(axis=1, keepdims=True)
    d_direction = (d_mu_dir - radial * out.mu_dir) / out.direction_norm[:, None]
    d_rho = grad_kl_spe * out.kl_spe_grad_kappa * expit(out.rho)
    d_vmf = np.hstack([d_direction, d_rho[:, None]])

    d_wg, d_bg, _ = linear_backward(out.x, params["encoder.gaussian.weight"], d_gaussian)
    d_wv, d_bv, _ = linear_backward(out.x, params["encoder.vmf.weight"], d_vmf)
    return {
        "encoder.gaussian.weight": d_wg,
        "encoder.gaussian.bias": d_bg,
        "encoder.vmf.weight": d_wv,
        "encoder.vmf.bias": d_bv,
    }


def encode_features(state: DlMiaState, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Deterministic f_dis for prediction and dumps; the raw diff in identity mode."""
    x = np.asarray(x, dtype=np.float64)
    if state.spec.identity:
        return x
    return encode(state, x, deterministic=True).f_dis
