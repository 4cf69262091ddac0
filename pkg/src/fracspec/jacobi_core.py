"""Shifted Jacobi polynomials on [0, 1].

``G_n^{(a,b)}(x) = P_n^{(a,b)}(2x - 1)`` is orthogonal under the weight
``(1 - x)^a x^b``. Everything here is a pure function of its arguments and
accepts either a scalar ``x`` or a numpy array of points.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from itertools import zip_longest

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import binom, gamma, gammaln, gammasgn

from fracspec.exceptions import DomainError

# Smallest admissible exponent; the weight stops being integrable at -1.
MIN_EXPONENT = -1.0 + 1e-8

# Above this argument scipy's gamma overflows, so ratios go through gammaln.
_DIRECT_GAMMA_LIMIT = 170.0


@dataclass(frozen=True)
class JacobiBasisId:
    """Weight-exponent pair ``(a, b)`` for the weight ``(1 - x)^a x^b``."""

    a: float
    b: float

    def __post_init__(self) -> None:
        for name, value in (("a", self.a), ("b", self.b)):
            if not math.isfinite(value) or value < MIN_EXPONENT:
                msg = f"Jacobi exponent {name}={value} must be finite and > -1"
                raise DomainError(msg)

    def swapped(self) -> JacobiBasisId:
        return JacobiBasisId(self.b, self.a)

    def shifted(self, k: int) -> JacobiBasisId:
        return JacobiBasisId(self.a + k, self.b + k)


def gamma_ratio(
    num: Sequence[ArrayLike], den: Sequence[ArrayLike]
) -> float | NDArray[np.float64]:
    """
    Evaluate ``prod(Gamma(num)) / prod(Gamma(den))``.

    Factors are paired ``Gamma(num[k]) / Gamma(den[k])`` so moderate arguments
    stay in range; once any argument reaches the overflow threshold the ratio
    is taken from sign-tracked log-gamma differences instead. A pole in the
    denominator yields zero.

    Args:
        num: Numerator arguments (scalars or broadcastable arrays)
        den: Denominator arguments

    Returns:
        The ratio, as a float for scalar input
    """
    nums = [np.asarray(z, dtype=float) for z in num]
    dens = [np.asarray(z, dtype=float) for z in den]
    shape = np.broadcast_shapes(*(z.shape for z in (*nums, *dens)))

    big = np.zeros(shape, dtype=bool)
    for z in (*nums, *dens):
        big = big | (np.abs(z) >= _DIRECT_GAMMA_LIMIT)

    with np.errstate(all="ignore"):
        direct = np.ones(shape)
        for p, q in zip_longest(nums, dens):
            top = gamma(p) if p is not None else 1.0
            bottom = gamma(q) if q is not None else 1.0
            direct = direct * (top / bottom)

        log_value = np.zeros(shape)
        sign = np.ones(shape)
        for p in nums:
            log_value = log_value + gammaln(p)
            sign = sign * gammasgn(p)
        for q in dens:
            log_value = log_value - gammaln(q)
            sign = sign * gammasgn(q)
        via_log = sign * np.exp(log_value)

    result = np.where(big, via_log, direct)
    return float(result) if result.ndim == 0 else result


def _as_unit_interval(x: ArrayLike) -> NDArray[np.float64]:
    xs = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xs)) or np.any(xs < 0.0) or np.any(xs > 1.0):
        msg = "Jacobi evaluation points must lie in [0, 1]"
        raise DomainError(msg)
    return xs


def _unwrap(value: NDArray[np.float64]) -> float | NDArray[np.float64]:
    return float(value) if value.ndim == 0 else value


def _recurrence_coeffs(a: float, b: float, n: int) -> tuple[float, float, float, float]:
    # P_n = ((a2 + a3 y) P_{n-1} - a4 P_{n-2}) / a1, valid for n >= 2
    apb = a + b
    a1 = 2.0 * n * (n + apb) * (2.0 * n + apb - 2.0)
    a2 = (2.0 * n + apb - 1.0) * (a * a - b * b)
    a3 = (2.0 * n + apb - 2.0) * (2.0 * n + apb - 1.0) * (2.0 * n + apb)
    a4 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * (2.0 * n + apb)
    return a1, a2, a3, a4


def eval_G_column(
    basis: JacobiBasisId, n_max: int, x: ArrayLike
) -> NDArray[np.float64]:
    """
    Evaluate ``G_0, ..., G_{n_max}`` in one recurrence pass.

    Returns:
        Array of shape ``(n_max + 1, *np.shape(x))``
    """
    if n_max < 0:
        msg = f"n_max must be nonnegative (got {n_max})"
        raise DomainError(msg)
    xs = _as_unit_interval(x)
    y = 2.0 * xs - 1.0
    a, b = basis.a, basis.b

    out = np.empty((n_max + 1, *xs.shape))
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * y
    for n in range(2, n_max + 1):
        a1, a2, a3, a4 = _recurrence_coeffs(a, b, n)
        out[n] = ((a2 + a3 * y) * out[n - 1] - a4 * out[n - 2]) / a1
    return out


def eval_G(basis: JacobiBasisId, n: int, x: ArrayLike) -> float | NDArray[np.float64]:
    """Evaluate ``G_n^{(a,b)}(x)`` by the three-term recurrence."""
    if n < 0:
        msg = f"Jacobi degree must be nonnegative (got {n})"
        raise DomainError(msg)
    return _unwrap(eval_G_column(basis, n, x)[n])


def eval_G_series(
    basis: JacobiBasisId, coeffs: ArrayLike, x: ArrayLike
) -> float | NDArray[np.float64]:
    """
    Sum ``sum_n d_n G_n^{(a,b)}(x)`` by Clenshaw's backward recurrence.

    Args:
        basis: Jacobi family of the series
        coeffs: Coefficients ``d_0, ..., d_N``
        x: Evaluation point(s) in [0, 1]

    Returns:
        Series value(s), shaped like ``x``
    """
    d = np.asarray(coeffs, dtype=float)
    xs = _as_unit_interval(x)
    if d.size == 0:
        return _unwrap(np.zeros_like(xs))
    y = 2.0 * xs - 1.0
    a, b = basis.a, basis.b

    b1 = np.zeros_like(xs)
    b2 = np.zeros_like(xs)
    for k in range(d.size - 1, -1, -1):
        if k == 0:
            step = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * y
        else:
            a1, a2, a3, _ = _recurrence_coeffs(a, b, k + 1)
            step = (a2 + a3 * y) / a1
        a1n, _, _, a4n = _recurrence_coeffs(a, b, k + 2)
        b1, b2 = d[k] + step * b1 - (a4n / a1n) * b2, b1
    return _unwrap(b1)


def eval_G_series_naive(
    basis: JacobiBasisId, coeffs: ArrayLike, x: ArrayLike
) -> float | NDArray[np.float64]:
    """Forward summation of a Jacobi series; the reference for Clenshaw."""
    d = np.asarray(coeffs, dtype=float)
    if d.size == 0:
        return _unwrap(np.zeros_like(_as_unit_interval(x)))
    column = eval_G_column(basis, d.size - 1, x)
    return _unwrap(np.tensordot(d, column, axes=1))


def explicit_G(basis: JacobiBasisId, n: int, x: ArrayLike) -> float | NDArray[np.float64]:
    """Explicit binomial sum for ``G_n``; only sensible for small ``n``."""
    xs = _as_unit_interval(x)
    y = 2.0 * xs - 1.0
    total = np.zeros_like(xs)
    for m in range(n + 1):
        coeff = binom(n + basis.a, m) * binom(n + basis.b, n - m) / 2.0**n
        total = total + coeff * (y - 1.0) ** (n - m) * (y + 1.0) ** m
    return _unwrap(total)


def norm_sq_G(basis: JacobiBasisId, j: ArrayLike) -> float | NDArray[np.float64]:
    """
    Squared weighted norm of ``G_j^{(a,b)}`` on [0, 1].

    The value is symmetric in ``(a, b)``; exponents are sorted first so the
    symmetry also holds bit for bit.
    """
    jj = np.asarray(j, dtype=float)
    if np.any(jj < 0):
        msg = "Jacobi degree must be nonnegative"
        raise DomainError(msg)
    a, b = sorted((basis.a, basis.b))

    # (2j + a + b + 1) Gamma(j + a + b + 1) collapses to Gamma(a + b + 2) at j = 0
    at_zero = gamma_ratio([a + 1.0, b + 1.0], [a + b + 2.0])
    with np.errstate(all="ignore"):
        general = np.asarray(
            gamma_ratio([jj + a + 1.0, jj + b + 1.0], [jj + 1.0, jj + a + b + 1.0])
        ) / (2.0 * jj + a + b + 1.0)
    return _unwrap(np.where(jj == 0, at_zero, general))


def _alternating(j: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.where(np.mod(j, 2) == 1, -1.0, 1.0)


def G_at_zero(basis: JacobiBasisId, j: ArrayLike) -> float | NDArray[np.float64]:
    """``G_j^{(a,b)}(0) = (-1)^j Gamma(j+b+1) / (Gamma(j+1) Gamma(b+1))``."""
    jj = np.asarray(j, dtype=float)
    if np.any(jj < 0):
        msg = "Jacobi degree must be nonnegative"
        raise DomainError(msg)
    value = _alternating(jj) * np.asarray(
        gamma_ratio([jj + basis.b + 1.0], [jj + 1.0, basis.b + 1.0])
    )
    return _unwrap(value)


def G_at_one(basis: JacobiBasisId, j: ArrayLike) -> float | NDArray[np.float64]:
    """``G_j^{(a,b)}(1)`` via reflection: ``(-1)^j G_j^{(b,a)}(0)``."""
    jj = np.asarray(j, dtype=float)
    value = _alternating(jj) * np.asarray(G_at_zero(basis.swapped(), jj))
    return _unwrap(value)


def deriv_G(
    basis: JacobiBasisId, n: int, k: int, x: ArrayLike
) -> float | NDArray[np.float64]:
    """k-th derivative of ``G_n^{(a,b)}``, a scaled ``G_{n-k}^{(a+k,b+k)}``."""
    if k < 0:
        msg = f"Derivative order must be nonnegative (got {k})"
        raise DomainError(msg)
    if k > n:
        return _unwrap(np.zeros_like(_as_unit_interval(x)))
    if k == 0:
        return eval_G(basis, n, x)
    apb = basis.a + basis.b
    factor = gamma_ratio([n + k + apb + 1.0], [n + apb + 1.0])
    return _unwrap(factor * np.asarray(eval_G(basis.shifted(k), n - k, x)))


def deriv_series_coeffs(basis: JacobiBasisId, coeffs: ArrayLike) -> NDArray[np.float64]:
    """Coefficients of ``d/dx sum d_n G_n^{(a,b)}`` in the ``(a+1, b+1)`` family."""
    d = np.asarray(coeffs, dtype=float)
    if d.size <= 1:
        return np.zeros(0)
    n = np.arange(1, d.size, dtype=float)
    return d[1:] * (n + basis.a + basis.b + 1.0)


def weighted_derivative_factor(n: int, k: int) -> float:
    """``(-1)^k n! / (n-k)!``, the constant in the weighted derivative identity."""
    return (-1.0) ** k * math.perm(n, k)
