"""
Gaussian and von Mises-Fisher kernels.

KL divergences against the standard priors (N(0, I) and the uniform
distribution on the sphere), reparameterized Gaussian sampling and Wood's
rejection sampler for vMF with a Householder rotation onto the mean
direction. Row-batched variants are what the encoder uses; the single-
posterior functions are thin wrappers over them.

vMF density on S^{m-1}:  C_m(κ) exp(κ μ·x),
C_m(κ) = κ^{m/2-1} / ((2π)^{m/2} I_{m/2-1}(κ))
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from modules.mialab.core.exceptions import (
    NumericDomainError,
    SamplerError,
    ShapeMismatchError,
)
from modules.mialab.numerics.special import log_bessel_i, log_gamma

KAPPA_ZERO = 1e-8
MAX_REJECTIONS = 1000
_UNIT_TOLERANCE = 1e-6
_HOUSEHOLDER_EPS = 1e-12


@dataclass(frozen=True)
class GaussianPosterior:
    """Diagonal Gaussian with log-variance parameterization."""

    mu: NDArray[np.float64]
    log_var: NDArray[np.float64]

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=np.float64)
        log_var = np.asarray(self.log_var, dtype=np.float64)
        if mu.ndim != 1 or mu.shape != log_var.shape or mu.size < 1:
            raise ShapeMismatchError(
                f"mu and log_var must be equal-length vectors, got {mu.shape} and {log_var.shape}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(log_var))):
            raise NumericDomainError("GaussianPosterior entries must be finite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "log_var", log_var)

    @property
    def dim(self) -> int:
        return int(self.mu.size)


@dataclass(frozen=True)
class VmfPosterior:
    """von Mises-Fisher posterior: unit mean direction and concentration."""

    mu: NDArray[np.float64]
    kappa: float

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.ndim != 1 or mu.size < 3:
            raise NumericDomainError(f"vMF needs a direction of dimension >= 3, got shape {mu.shape}")
        if not np.all(np.isfinite(mu)) or abs(float(np.linalg.norm(mu)) - 1.0) > _UNIT_TOLERANCE:
            raise NumericDomainError("vMF mean direction must be a finite unit vector")
        kappa = float(self.kappa)
        if not math.isfinite(kappa) or kappa < 0.0:
            raise NumericDomainError(f"vMF concentration must be finite and >= 0, got {kappa}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", kappa)

    @property
    def dim(self) -> int:
        return int(self.mu.size)


# =============================================================================
# Gaussian
# =============================================================================


def kl_gaussian_rows(
    mu: NDArray[np.float64], log_var: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """
    Per-row KL(N(mu, diag(exp(log_var))) || N(0, I)) with analytic gradients.

    Returns:
        (kl of shape (n,), d kl / d mu, d kl / d log_var)
    """
    if mu.shape != log_var.shape:
        raise ShapeMismatchError(f"mu {mu.shape} and log_var {log_var.shape} differ")
    var = np.exp(log_var)
    d = mu.shape[-1]
    kl = 0.5 * (-log_var.sum(axis=-1) + var.sum(axis=-1) + (mu * mu).sum(axis=-1) - d)
    return kl, mu.copy(), 0.5 * (var - 1.0)


def kl_gaussian(
    post: GaussianPosterior,
) -> tuple[float, NDArray[np.float64], NDArray[np.float64]]:
    """KL of a single Gaussian posterior against N(0, I), plus gradients w.r.t. (mu, log_var)."""
    kl, grad_mu, grad_log_var = kl_gaussian_rows(post.mu[None, :], post.log_var[None, :])
    return float(kl[0]), grad_mu[0], grad_log_var[0]


def sample_gaussian(post: GaussianPosterior, noise: ArrayLike) -> NDArray[np.float64]:
    """Reparameterized draw mu + exp(½ log_var) ⊙ noise; noise is supplied by the caller."""
    eps = np.asarray(noise, dtype=np.float64)
    if eps.shape != post.mu.shape:
        raise ShapeMismatchError(f"noise shape {eps.shape} does not match posterior {post.mu.shape}")
    return post.mu + np.exp(0.5 * post.log_var) * eps


# =============================================================================
# von Mises-Fisher
# =============================================================================


def mean_resultant_length(kappa: ArrayLike, m: int) -> float | NDArray[np.float64]:
    """A_m(κ) = I_{m/2}(κ) / I_{m/2-1}(κ), the expected projection E[μ·x]."""
    arr = np.atleast_1d(np.asarray(kappa, dtype=np.float64))
    nu = m / 2.0 - 1.0
    out = np.zeros_like(arr)
    positive = arr > 0.0
    if np.any(positive):
        kp = arr[positive]
        out[positive] = np.exp(
            np.asarray(log_bessel_i(nu + 1.0, kp)) - np.asarray(log_bessel_i(nu, kp))
        )
    return float(out[0]) if np.ndim(kappa) == 0 else out


def kl_vmf(kappa: ArrayLike, m: int) -> tuple[float | NDArray[np.float64], float | NDArray[np.float64]]:
    """
    KL(vMF(μ, κ) || Uniform(S^{m-1})) and its derivative in κ.

    Independent of μ. Below κ = 1e-8 the value is the analytic limit 0.
    dKL/dκ = κ(1 - A²) - (m - 1)A with A the mean resultant length.

    Raises:
        NumericDomainError: m < 3 or negative κ.
    """
    if int(m) != m or m < 3:
        raise NumericDomainError(f"kl_vmf requires integer m >= 3, got {m}")
    arr = np.atleast_1d(np.asarray(kappa, dtype=np.float64))
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise NumericDomainError("kl_vmf requires finite kappa >= 0")

    nu = m / 2.0 - 1.0
    half_m = m / 2.0
    const = (
        -half_m * math.log(2.0 * math.pi)
        + half_m * math.log(math.pi)
        + math.log(2.0)
        - float(log_gamma(half_m))
    )

    value = np.zeros_like(arr)
    grad = np.zeros_like(arr)
    active = arr >= KAPPA_ZERO
    if np.any(active):
        k = arr[active]
        log_i_nu = np.asarray(log_bessel_i(nu, k))
        ratio = np.exp(np.asarray(log_bessel_i(nu + 1.0, k)) - log_i_nu)
        value[active] = k * ratio + nu * np.log(k) - log_i_nu + const
        grad[active] = k * (1.0 - ratio * ratio) - (m - 1.0) * ratio
        # clamp round-off below zero
        value[active] = np.maximum(value[active], 0.0)
    if np.any(~active):
        grad[~active] = arr[~active] / m

    if np.ndim(kappa) == 0:
        return float(value[0]), float(grad[0])
    return value, grad


def _wood_radial(
    kappa: NDArray[np.float64], m: int, rng: np.random.Generator
) -> NDArray[np.float64]:
    """Rejection-sample ω = μ·x for each κ > 0 (Wood's scheme)."""
    dim1 = m - 1.0
    root = np.sqrt(4.0 * kappa * kappa + dim1 * dim1)
    b = dim1 / (2.0 * kappa + root)
    a = (dim1 + 2.0 * kappa + root) / 4.0
    d = 4.0 * a * b / (1.0 + b) - dim1 * math.log(dim1)

    omega = np.empty_like(kappa)
    pending = np.arange(kappa.size)
    shape = dim1 / 2.0
    for _ in range(MAX_REJECTIONS):
        if pending.size == 0:
            return omega
        g1 = rng.standard_gamma(shape, size=pending.size)
        g2 = rng.standard_gamma(shape, size=pending.size)
        eps = g1 / (g1 + g2)
        u = rng.uniform(size=pending.size)
        bp, ap, dp = b[pending], a[pending], d[pending]
        denom = 1.0 - (1.0 - bp) * eps
        w = (1.0 - (1.0 + bp) * eps) / denom
        t = 2.0 * ap * bp / denom
        accepted = dim1 * np.log(t) - t + dp >= np.log(u)
        omega[pending[accepted]] = w[accepted]
        pending = pending[~accepted]
    if pending.size:
        raise SamplerError(
            f"vMF rejection sampler exceeded {MAX_REJECTIONS} iterations "
            f"for {pending.size} rows (kappa={kappa[pending][:3].tolist()}, m={m})"
        )
    return omega


def sample_vmf_canonical(
    kappa: ArrayLike, m: int, rng: np.random.Generator
) -> NDArray[np.float64]:
    """
    vMF draws around the north pole e₁, one row per κ.

    κ = 0 rows are uniform on the sphere. Rotate with householder_rotate to
    move the mean direction onto μ.
    """
    if m < 3:
        raise NumericDomainError(f"vMF sampling requires m >= 3, got {m}")
    kappas = np.atleast_1d(np.asarray(kappa, dtype=np.float64))
    n = kappas.size
    out = np.empty((n, m))

    uniform = kappas <= 0.0
    if np.any(uniform):
        g = rng.standard_normal((int(uniform.sum()), m))
        out[uniform] = g / np.linalg.norm(g, axis=1, keepdims=True)

    concentrated = ~uniform
    if np.any(concentrated):
        omega = _wood_radial(kappas[concentrated], m, rng)
        v = rng.standard_normal((omega.size, m - 1))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        radial = np.sqrt(np.clip(1.0 - omega * omega, 0.0, None))
        out[concentrated, 0] = omega
        out[concentrated, 1:] = radial[:, None] * v
    return out


def householder_rotate(mu: NDArray[np.float64], z: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    Apply, row-wise, the reflection H(μ) = I - 2uuᵀ/‖u‖² with u = e₁ - μ.

    H maps e₁ onto μ; rows with μ == e₁ pass through unchanged.
    """
    mu2 = np.atleast_2d(mu)
    z2 = np.atleast_2d(z)
    if mu2.shape != z2.shape:
        raise ShapeMismatchError(f"mu {mu2.shape} and z {z2.shape} differ")
    u = -mu2.copy()
    u[:, 0] += 1.0
    norm_sq = (u * u).sum(axis=1)
    scale = np.where(norm_sq > _HOUSEHOLDER_EPS**2, 2.0 / np.maximum(norm_sq, _HOUSEHOLDER_EPS**2), 0.0)
    proj = (u * z2).sum(axis=1)
    out = z2 - (scale * proj)[:, None] * u
    return out if np.ndim(z) == 2 else out[0]


def sample_vmf(post: VmfPosterior, rng: np.random.Generator, size: int | None = None) -> NDArray[np.float64]:
    """
    Draw from vMF(μ, κ). Returns one unit vector, or a (size, m) array when size is given.
    """
    n = 1 if size is None else int(size)
    canonical = sample_vmf_canonical(np.full(n, post.kappa), post.dim, rng)
    rotated = householder_rotate(np.broadcast_to(post.mu, canonical.shape), canonical)
    return rotated[0] if size is None else rotated
