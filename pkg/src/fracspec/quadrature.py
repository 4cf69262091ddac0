"""Gauss-Jacobi quadrature on [0, 1] by the Golub-Welsch construction."""

from __future__ import annotations

import threading
from collections.abc import Callable
from dataclasses import dataclass
from functools import cache

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import LinAlgError, eigh_tridiagonal

from fracspec.exceptions import (
    DomainError,
    QuadratureConstructionError,
    QuadratureEvaluationError,
)
from fracspec.jacobi_core import JacobiBasisId, gamma_ratio
from fracspec.logging import logger

_RULE_LOCK = threading.Lock()


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for ``int_0^1 (1-x)^a x^b g(x) dx``."""

    basis: JacobiBasisId
    order: int
    nodes: NDArray[np.float64]
    weights: NDArray[np.float64]


def _recurrence_matrix(
    a: float, b: float, n: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Diagonal and off-diagonal of the monic Jacobi matrix on [-1, 1]."""
    k = np.arange(n, dtype=float)
    apb = a + b
    diag = np.empty(n)
    diag[0] = (b - a) / (apb + 2.0)
    if n > 1:
        kk = k[1:]
        diag[1:] = (b * b - a * a) / ((2.0 * kk + apb) * (2.0 * kk + apb + 2.0))

    off_sq = np.empty(max(n - 1, 0))
    if n > 1:
        off_sq[0] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + apb) ** 2 * (3.0 + apb))
        kk = k[2:]
        off_sq[1:] = (
            4.0
            * kk
            * (kk + a)
            * (kk + b)
            * (kk + apb)
            / ((2.0 * kk + apb) ** 2 * (2.0 * kk + apb + 1.0) * (2.0 * kk + apb - 1.0))
        )
    return diag, np.sqrt(off_sq)


@cache
def _build_rule(a: float, b: float, n: int) -> QuadratureRule:
    basis = JacobiBasisId(a, b)
    mass = gamma_ratio([a + 1.0, b + 1.0], [a + b + 2.0])
    diag, off = _recurrence_matrix(a, b, n)

    if n == 1:
        t = diag.copy()
        weights = np.array([mass])
    else:
        try:
            t, vectors = eigh_tridiagonal(diag, off)
        except LinAlgError as e:
            msg = f"Golub-Welsch eigenvalue solve failed for a={a} b={b} n={n}"
            raise QuadratureConstructionError(msg) from e
        weights = mass * vectors[0, :] ** 2

    nodes = 0.5 * (1.0 + t)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    logger.debug("Built Gauss-Jacobi rule a={a} b={b} n={n}", a=a, b=b, n=n)
    return QuadratureRule(basis=basis, order=n, nodes=nodes, weights=weights)


def gauss_jacobi_rule(basis: JacobiBasisId, order: int) -> QuadratureRule:
    """
    Return the ``order``-point Gauss-Jacobi rule for ``basis``.

    The rule is exact for polynomials of degree ``2 * order - 1`` against the
    weight ``(1 - x)^a x^b``. Rules are cached per (a, b) rounded to 1e-12 and
    order; construction is serialized.

    Raises:
        DomainError: If ``order`` is not positive
        QuadratureConstructionError: If the eigenvalue solve does not converge
    """
    if order < 1:
        msg = f"Quadrature order must be positive (got {order})"
        raise DomainError(msg)
    with _RULE_LOCK:
        return _build_rule(round(basis.a, 12), round(basis.b, 12), int(order))


def clear_rule_cache() -> None:
    with _RULE_LOCK:
        _build_rule.cache_clear()


def integrate(
    rule: QuadratureRule, f: Callable[[NDArray[np.float64]], object]
) -> float:
    """
    Apply ``rule`` to ``f``; the weight is inside the rule, not in ``f``.

    ``f`` is called once with the whole node array; scalar returns are
    broadcast.

    Raises:
        QuadratureEvaluationError: If ``f`` is not finite at some node
    """
    values = np.broadcast_to(np.asarray(f(rule.nodes), dtype=float), rule.nodes.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        node = float(rule.nodes[np.argmax(bad)])
        msg = f"Integrand is not finite at quadrature node x={node!r}"
        raise QuadratureEvaluationError(msg, node)
    return float(rule.weights @ values)
