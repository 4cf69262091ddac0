"""Condition A: the (alpha, r) -> (beta, c**) map and the eigenvalue ladders."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import bisect

from fracspec.exceptions import DomainError, ParameterError
from fracspec.jacobi_core import JacobiBasisId, gamma_ratio
from fracspec.logging import logger
from fracspec.types import LadderKind

# r this close to 0 or 1 is treated as one-sided
R_SNAP = 1e-12
BETA_RESIDUAL_TOL = 1e-12
_DENOMINATOR_FLOOR = 1e-14


def _check_alpha(alpha: float) -> None:
    if not (math.isfinite(alpha) and 1.0 < alpha < 2.0):
        msg = f"alpha must lie in (1, 2) (got {alpha})"
        raise ParameterError(msg)


def _check_r(r: float) -> None:
    if not (math.isfinite(r) and 0.0 <= r <= 1.0):
        msg = f"r must lie in [0, 1] (got {r})"
        raise ParameterError(msg)


def condition_a_ratio(alpha: float, beta: float) -> float:
    """The weighting r implied by beta: sin(pi b) / [sin(pi(a-b)) + sin(pi b)]."""
    s_beta = math.sin(math.pi * beta)
    return s_beta / (math.sin(math.pi * (alpha - beta)) + s_beta)


def solve_beta(alpha: float, r: float) -> float:
    """
    Find the beta in [alpha - 1, 1] that matches the weighting r.

    The ratio decreases monotonically from 1 at ``beta = alpha - 1`` to 0 at
    ``beta = 1``, so bisection always brackets the root. An r within 1e-12 of
    either end snaps to the exact endpoint.

    Raises:
        ParameterError: If alpha or r is out of range, or the residual of the
            bisection exceeds 1e-12
    """
    _check_alpha(alpha)
    _check_r(r)
    if r <= R_SNAP:
        return 1.0
    if r >= 1.0 - R_SNAP:
        return alpha - 1.0

    beta = bisect(
        lambda b: condition_a_ratio(alpha, b) - r,
        alpha - 1.0,
        1.0,
        xtol=1e-15,
        maxiter=200,
    )
    residual = abs(condition_a_ratio(alpha, beta) - r)
    if residual > BETA_RESIDUAL_TOL:
        msg = f"Condition A residual {residual:.3e} too large for alpha={alpha} r={r}"
        raise ParameterError(msg)
    return float(beta)


def c_star(alpha: float, beta: float) -> float:
    """c** = sin(pi alpha) / [sin(pi(alpha - beta)) + sin(pi beta)]."""
    denominator = math.sin(math.pi * (alpha - beta)) + math.sin(math.pi * beta)
    if abs(denominator) < _DENOMINATOR_FLOOR:
        msg = f"Degenerate Condition A denominator for alpha={alpha} beta={beta}"
        raise ParameterError(msg)
    return math.sin(math.pi * alpha) / denominator


@dataclass(frozen=True)
class FractionalModelParams:
    """The Condition A tuple (alpha, r, beta, c**)."""

    alpha: float
    r: float
    beta: float
    c_star_star: float

    @classmethod
    def from_alpha_r(cls, alpha: float, r: float) -> FractionalModelParams:
        beta = solve_beta(alpha, r)
        if r <= R_SNAP:
            r = 0.0
        elif r >= 1.0 - R_SNAP:
            r = 1.0
        params = cls(alpha=alpha, r=r, beta=beta, c_star_star=c_star(alpha, beta))
        logger.debug(
            "Resolved Condition A alpha={alpha} r={r} beta={beta} c_star_star={c}",
            alpha=alpha,
            r=r,
            beta=beta,
            c=params.c_star_star,
        )
        return params

    @property
    def sigma(self) -> float:
        """Order 2 - alpha of the fractional integral."""
        return 2.0 - self.alpha

    @property
    def solution_basis(self) -> JacobiBasisId:
        return JacobiBasisId(self.alpha - self.beta, self.beta)

    @property
    def rhs_basis(self) -> JacobiBasisId:
        return JacobiBasisId(self.beta, self.alpha - self.beta)

    @property
    def kernel_basis(self) -> JacobiBasisId:
        return JacobiBasisId(self.alpha - self.beta - 1.0, self.beta - 1.0)

    @property
    def flux_basis(self) -> JacobiBasisId:
        return JacobiBasisId(self.beta - 1.0, self.alpha - self.beta - 1.0)

    @property
    def rl_rhs_basis(self) -> JacobiBasisId:
        return JacobiBasisId(self.beta + 1.0, self.alpha - self.beta + 1.0)

    @property
    def mu_minus_one(self) -> float:
        return ladder_value(self, "mu", -1)

    def ladder(self, kind: LadderKind, n: int) -> float:
        return ladder_value(self, kind, n)

    def mirrored(self) -> FractionalModelParams:
        """Swap the sides: (r, beta) -> (1 - r, alpha - beta); c** is symmetric."""
        return replace(self, r=1.0 - self.r, beta=self.alpha - self.beta)

    def perturbed(self, delta: float) -> FractionalModelParams:
        """Copy with c** shifted by ``delta``; breaks Condition A on purpose."""
        return replace(self, c_star_star=self.c_star_star + delta)


def _ladder_base(alpha: float, n: NDArray[np.float64]) -> NDArray[np.float64]:
    # Gamma(n + alpha - 1) / Gamma(n + 1); every ladder is this times a polynomial
    return np.asarray(gamma_ratio([n + alpha - 1.0], [n + 1.0]))


def _ladder(
    params: FractionalModelParams, kind: LadderKind, n: NDArray[np.float64]
) -> NDArray[np.float64]:
    alpha, c = params.alpha, params.c_star_star
    base = _ladder_base(alpha, n)
    match kind:
        case "sigma":
            return -c * base
        case "mu":
            return c * base * (n + alpha - 1.0)
        case "kappa":
            return c * base * (n + alpha - 1.0) * (n + alpha)
        case "lambda":
            return -c * base * (n + alpha - 1.0) * (n + alpha)
    msg = f"Unknown ladder kind {kind!r}"
    raise DomainError(msg)


def ladder_value(params: FractionalModelParams, kind: LadderKind, n: int) -> float:
    """
    One entry of an eigenvalue ladder.

    ``lambda_n = -c** G(n+1+a)/G(n+1)``, ``mu_n = c** G(n+a)/G(n+1)``,
    ``sigma_n = -c** G(n+a-1)/G(n+1)``, ``kappa_n = c** G(n+a+1)/G(n+1)`` and
    the special entry ``mu_{-1} = -c** G(a)``.

    Raises:
        DomainError: For a negative index other than ``mu_{-1}``
    """
    if n == -1 and kind == "mu":
        return -params.c_star_star * math.gamma(params.alpha)
    if n < 0:
        msg = f"Ladder {kind} has no entry at index {n}"
        raise DomainError(msg)
    return float(_ladder(params, kind, np.asarray(float(n))))


def ladder_array(
    params: FractionalModelParams, kind: LadderKind, n_max: int
) -> NDArray[np.float64]:
    """Entries 0..n_max of a ladder in one vectorised pass."""
    if n_max < 0:
        return np.zeros(0)
    return np.asarray(_ladder(params, kind, np.arange(n_max + 1, dtype=float)))
