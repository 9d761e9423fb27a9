"""
Special functions.

Only what the vMF kernels need: ln Γ and the modified Bessel function of
the first kind I_ν, in plain and log-scaled form. The log-scaled form stays
finite where I_ν itself under- or overflows (large order with small x,
large x), which is where the vMF KL lives.

Branches of log_bessel_i:
    x == 0          closed form
    0 < x <= 50     power series summed in the log domain
    x > 50, ν² <= x Hankel large-argument expansion
    x > 50, ν² > x  uniform (Debye) large-order expansion
"""

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from modules.mialab.core.exceptions import NumericDomainError, NumericOverflowError

SERIES_CUTOFF = 50.0
OVERFLOW_GUARD = 700.0

_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_SERIES_TERMS = 200
_HANKEL_TERMS = 60


def _as_float_array(x: ArrayLike) -> tuple[NDArray[np.float64], bool]:
    arr = np.asarray(x, dtype=np.float64)
    return np.atleast_1d(arr), arr.ndim == 0


def _lanczos(x: NDArray[np.float64]) -> NDArray[np.float64]:
    """ln Γ(x) for x >= 0.5."""
    shifted = x - 1.0
    acc = np.full_like(shifted, _LANCZOS_COEFFS[0])
    for i, coeff in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += coeff / (shifted + i)
    t = shifted + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (shifted + 0.5) * np.log(t) - t + np.log(acc)


def log_gamma(x: ArrayLike) -> float | NDArray[np.float64]:
    """
    Natural log of the Gamma function for x > 0 (Lanczos, g=7, reflection below 0.5).

    Raises:
        NumericDomainError: If any x <= 0 or is not finite.
    """
    arr, scalar = _as_float_array(x)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise NumericDomainError(f"log_gamma requires finite x > 0, got {x!r}")

    out = np.empty_like(arr)
    high = arr >= 0.5
    out[high] = _lanczos(arr[high])
    low = ~high
    if np.any(low):
        xl = arr[low]
        out[low] = np.log(np.pi / np.sin(np.pi * xl)) - _lanczos(1.0 - xl)
    return float(out[0]) if scalar else out


def _log_series(order: float, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """log I_ν(x) = ν log(x/2) + log Σ_k (x/2)^{2k} / (k! Γ(k+ν+1)), x > 0."""
    half_log = np.log(x / 2.0)
    k = np.arange(1, _SERIES_TERMS, dtype=np.float64)
    steps = 2.0 * half_log[:, None] - np.log(k)[None, :] - np.log(k + order)[None, :]
    log_terms = np.concatenate([np.zeros((x.size, 1)), np.cumsum(steps, axis=1)], axis=1)
    peak = log_terms.max(axis=1, keepdims=True)
    log_sum = peak[:, 0] + np.log(np.exp(log_terms - peak).sum(axis=1))
    return order * half_log - float(log_gamma(order + 1.0)) + log_sum


def _log_hankel(order: float, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """log I_ν(x) ~ x - ½ log(2πx) + log Σ_k t_k, t_k/t_{k-1} = -(4ν² - (2k-1)²)/(8kx)."""
    mu = 4.0 * order * order
    k = np.arange(1, _HANKEL_TERMS, dtype=np.float64)
    ratios = -(mu - (2.0 * k - 1.0) ** 2)[None, :] / (8.0 * k[None, :] * x[:, None])
    terms = np.cumprod(ratios, axis=1)
    series = 1.0 + terms.sum(axis=1)
    return x - 0.5 * np.log(2.0 * np.pi * x) + np.log(series)


def _log_debye(order: float, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Uniform large-order expansion of log I_ν(νz), four correction terms."""
    z = x / order
    s = np.sqrt(1.0 + z * z)
    t = 1.0 / s
    eta = s + np.log(z / (1.0 + s))
    t2 = t * t
    u1 = t * (3.0 - 5.0 * t2) / 24.0
    u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0
    u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2**2 - 425425.0 * t2**3) / 414720.0
    u4 = t2 * t2 * (
        4465125.0
        - 94121676.0 * t2
        + 349922430.0 * t2**2
        - 446185740.0 * t2**3
        + 185910725.0 * t2**4
    ) / 39813120.0
    correction = 1.0 + u1 / order + u2 / order**2 + u3 / order**3 + u4 / order**4
    return order * eta - 0.5 * np.log(2.0 * np.pi * order) - 0.5 * np.log(s) + np.log(correction)


def log_bessel_i(order: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """
    log I_order(x), vectorized over x.

    Returns -inf at x == 0 for order > 0 and 0 for order == 0.

    Raises:
        NumericDomainError: Negative order or negative / non-finite x.
    """
    order = float(order)
    if not math.isfinite(order) or order < 0.0:
        raise NumericDomainError(f"Bessel order must be finite and >= 0, got {order}")
    arr, scalar = _as_float_array(x)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise NumericDomainError(f"Bessel argument must be finite and >= 0, got {x!r}")

    out = np.empty_like(arr)

    zero = arr == 0.0
    out[zero] = 0.0 if order == 0.0 else -np.inf

    small = (arr > 0.0) & (arr <= SERIES_CUTOFF)
    if np.any(small):
        out[small] = _log_series(order, arr[small])

    large = arr > SERIES_CUTOFF
    if np.any(large):
        if order * order <= SERIES_CUTOFF:
            out[large] = _log_hankel(order, arr[large])
        else:
            xl = arr[large]
            hankel = order * order <= xl
            out_large = np.empty_like(xl)
            if np.any(hankel):
                out_large[hankel] = _log_hankel(order, xl[hankel])
            if np.any(~hankel):
                out_large[~hankel] = _log_debye(order, xl[~hankel])
            out[large] = out_large

    return float(out[0]) if scalar else out


def bessel_i(order: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """
    Modified Bessel function of the first kind I_order(x).

    Raises:
        NumericDomainError: Negative order or negative x.
        NumericOverflowError: x above 700.
    """
    arr, scalar = _as_float_array(x)
    if np.any(arr > OVERFLOW_GUARD):
        raise NumericOverflowError(
            f"bessel_i argument above overflow guard {OVERFLOW_GUARD}; use log_bessel_i"
        )
    values = np.exp(np.asarray(log_bessel_i(order, arr), dtype=np.float64))
    return float(values[0]) if scalar else values
