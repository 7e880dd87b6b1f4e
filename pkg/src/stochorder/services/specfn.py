"""Special functions used by the distribution kernels.

All functions broadcast over numpy arrays and return a plain ``float`` when every
argument is a scalar.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import zetac

from ..errors import ConvergenceError, DomainError, require

logger = logging.getLogger(__name__)

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Arguments below this are shifted up with Gamma(x + 1) = x Gamma(x) before the
# asymptotic series is applied.
_STIRLING_SHIFT = 15.0

# B_{2k} / (2k (2k - 1)) for k = 1..8; the first omitted term is below 2e-21 at x = 15.
_STIRLING_COEFFS = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)

# ln Gamma(2 + u) = (1 - euler_gamma) u + sum_{k>=2} (-1)^k (zeta(k) - 1) u^k / k, |u| < 2.
# Every argument below _ROOT_SERIES_LIMIT is mapped to |u| <= 1, where 64 terms reach 1e-21.
_ROOT_SERIES_LIMIT = 4.0
_ROOT_SERIES = tuple((-1.0) ** k * float(zetac(k)) / k for k in range(2, 65))

_EPS = float(np.finfo(float).eps)
_FPMIN = 1e-300


@dataclass(frozen=True)
class EvalError:
    """Error bound attached to an evaluator: ``absolute + relative * |value|``."""

    absolute_bound: float = 0.0
    relative_bound: float = 0.0

    def __post_init__(self) -> None:
        for name in ("absolute_bound", "relative_bound"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")

    def bound(self, value: ArrayLike) -> NDArray[np.float64]:
        return self.absolute_bound + self.relative_bound * np.abs(np.asarray(value, dtype=float))


def log_gamma(x: ArrayLike) -> float | NDArray[np.float64]:
    """ln Gamma(x) for x > 0.

    Arguments below 4 use the Taylor series about 2, which keeps full relative accuracy
    around the roots at 1 and 2; larger ones use the Stirling series after upward shifting.
    """
    arr = np.asarray(x, dtype=float)
    require(
        bool(np.all(np.isfinite(arr))) and bool(np.all(arr > 0)),
        "log_gamma requires finite x > 0",
    )
    flat = np.array(arr, dtype=float, ndmin=1, copy=True).ravel()
    result = np.empty_like(flat)
    near = flat < _ROOT_SERIES_LIMIT
    if near.any():
        result[near] = _log_gamma_near_roots(flat[near])
    if (~near).any():
        result[~near] = _log_gamma_stirling(flat[~near])
    return _unwrap(result.reshape(arr.shape))


def _log_gamma_near_roots(x: NDArray[np.float64]) -> NDArray[np.float64]:
    # u = x - c is exact for each band (Sterbenz)
    u = np.select([x < 0.5, x < 1.5, x < 3.0], [x, x - 1.0, x - 2.0], default=x - 3.0)
    series = np.zeros_like(u)
    for coeff in reversed(_ROOT_SERIES):
        series = series * u + coeff
    at_two = (1.0 - np.euler_gamma) * u + u * u * series  # ln Gamma(2 + u)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.select(
            [x < 0.5, x < 1.5, x < 3.0],
            [at_two - np.log1p(u) - np.log(x), at_two - np.log1p(u), at_two],
            default=at_two + np.log(x - 1.0),
        )


def _log_gamma_stirling(x: NDArray[np.float64]) -> NDArray[np.float64]:
    z = x.copy()
    shift = np.zeros_like(z)
    while True:
        low = z < _STIRLING_SHIFT
        if not low.any():
            break
        shift[low] += np.log(z[low])
        z[low] += 1.0

    inv_sq = 1.0 / (z * z)
    series = np.zeros_like(z)
    for coeff in reversed(_STIRLING_COEFFS):
        series = series * inv_sq + coeff
    return (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + series / z - shift


def reg_lower_incomplete_gamma(a: ArrayLike, x: ArrayLike) -> float | NDArray[np.float64]:
    """P(a, x) = gamma(a, x) / Gamma(a)."""
    lower, _ = incomplete_gamma_pair(a, x)
    return _unwrap(lower)


def reg_upper_incomplete_gamma(a: ArrayLike, x: ArrayLike) -> float | NDArray[np.float64]:
    """Q(a, x) = 1 - P(a, x), evaluated without cancellation in the right tail."""
    _, upper = incomplete_gamma_pair(a, x)
    return _unwrap(upper)


def incomplete_gamma_pair(a: ArrayLike, x: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Return (P(a, x), Q(a, x)) as arrays.

    The power series is used for x < a + 1 and the continued fraction otherwise, so the
    directly computed member of the pair is always the smaller one.
    """
    a_arr, x_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    require(
        bool(np.all(np.isfinite(a_arr))) and bool(np.all(a_arr > 0)),
        "incomplete gamma requires a > 0",
    )
    require(
        not bool(np.any(np.isnan(x_arr))) and bool(np.all(x_arr >= 0)),
        "incomplete gamma requires x >= 0",
    )
    a_flat = a_arr.ravel()
    x_flat = x_arr.ravel()
    lower = np.zeros(a_flat.shape)
    upper = np.ones(a_flat.shape)

    infinite = np.isinf(x_flat)
    lower[infinite] = 1.0
    upper[infinite] = 0.0

    series = (x_flat > 0) & (x_flat < a_flat + 1.0)
    fraction = (x_flat >= a_flat + 1.0) & ~infinite
    if series.any():
        p = _lower_series(a_flat[series], x_flat[series])
        lower[series] = p
        upper[series] = 1.0 - p
    if fraction.any():
        q = _upper_continued_fraction(a_flat[fraction], x_flat[fraction])
        upper[fraction] = q
        lower[fraction] = 1.0 - q
    return lower.reshape(a_arr.shape), upper.reshape(a_arr.shape)


def log_sum_exp(values: ArrayLike, axis: int | None = None) -> float | NDArray[np.float64]:
    """ln sum exp(values), accumulated in sorted-descending order.

    With ``axis=None`` the input is flattened and a float is returned.
    """
    arr = np.asarray(values, dtype=float)
    require(arr.size > 0, "log_sum_exp requires a nonempty sequence")
    require(
        not bool(np.any(np.isnan(arr))) and not bool(np.any(arr == np.inf)),
        "log_sum_exp accepts finite values or -inf only",
    )
    if axis is None:
        arr = arr.ravel()
        axis = 0
    ordered = -np.sort(-arr, axis=axis)
    top = np.take(ordered, 0, axis=axis)
    empty = np.isneginf(top)
    anchor = np.where(empty, 0.0, top)
    with np.errstate(divide="ignore"):
        total = np.sum(np.exp(ordered - np.expand_dims(anchor, axis)), axis=axis)
        result = np.where(empty, -np.inf, anchor + np.log(total))
    return _unwrap(result)


def _lower_series(a: NDArray[np.float64], x: NDArray[np.float64]) -> NDArray[np.float64]:
    log_prefactor = a * np.log(x) - x - np.asarray(log_gamma(a))
    term = 1.0 / a
    total = term.copy()
    shape = a.copy()
    limit = _iteration_limit(a)
    for _ in range(limit):
        shape += 1.0
        term = term * (x / shape)
        total += term
        if bool(np.all(np.abs(term) < np.abs(total) * _EPS)):
            break
    else:
        raise ConvergenceError(f"incomplete gamma series did not converge in {limit} terms")
    return np.clip(total * np.exp(log_prefactor), 0.0, 1.0)


def _upper_continued_fraction(a: NDArray[np.float64], x: NDArray[np.float64]) -> NDArray[np.float64]:
    # modified Lentz evaluation
    log_prefactor = a * np.log(x) - x - np.asarray(log_gamma(a))
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _FPMIN)
    d = 1.0 / b
    h = d.copy()
    limit = _iteration_limit(a)
    for i in range(1, limit + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = b + an / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if bool(np.all(np.abs(delta - 1.0) < 4.0 * _EPS)):
            break
    else:
        raise ConvergenceError(f"incomplete gamma continued fraction did not converge in {limit} terms")
    return np.clip(np.exp(log_prefactor) * h, 0.0, 1.0)


def _iteration_limit(a: NDArray[np.float64]) -> int:
    return int(200 + 40 * math.sqrt(float(np.max(a))))


def _unwrap(values: NDArray[np.float64]) -> float | NDArray[np.float64]:
    if np.ndim(values) == 0:
        return float(values)
    return values
