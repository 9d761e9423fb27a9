"""
Central finite-difference gradient checking.

Used by the test suite and by the verify command.
"""

from collections.abc import Callable, Iterable

import numpy as np
from numpy.typing import NDArray

from modules.mialab.nn.layers import Params

DEFAULT_STEP = 1e-5


def relative_error(analytic: NDArray[np.float64], numeric: NDArray[np.float64], floor: float = 1e-6) -> float:
    """max |a - n| / max(|a| + |n|, floor), elementwise."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.abs(a) + np.abs(n), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def numerical_gradient(
    loss_fn: Callable[[Params], float],
    params: Params,
    name: str,
    step: float = DEFAULT_STEP,
) -> NDArray[np.float64]:
    """Central differences of loss_fn with respect to params[name]."""
    base = params[name]
    grad = np.zeros_like(base)
    for index in np.ndindex(base.shape):
        shifted = base.copy()
        shifted[index] = base[index] + step
        plus = loss_fn({**params, name: shifted})
        shifted[index] = base[index] - step
        minus = loss_fn({**params, name: shifted})
        grad[index] = (plus - minus) / (2.0 * step)
    return grad


def check_gradients(
    loss_fn: Callable[[Params], float],
    params: Params,
    analytic: Params,
    names: Iterable[str] | None = None,
    step: float = DEFAULT_STEP,
) -> dict[str, float]:
    """Relative error per parameter between analytic and numerical gradients."""
    report: dict[str, float] = {}
    for name in names if names is not None else analytic:
        numeric = numerical_gradient(loss_fn, params, name, step)
        report[name] = relative_error(analytic[name], numeric)
    return report
