"""Quadrature oracle for the fractional integrals, fluxes and operators.

The operators act on weighted functions ``(1 - x)^a x^b p(x)``. Endpoint
singularities, both of the Abel kernel and of the weight, are absorbed into a
Gauss-Jacobi rule by an affine substitution, so every integrand handed to the
rule is smooth. Derivatives taken outside the integral use fourth-order
central differences.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
from numpy.polynomial import polynomial as npoly
from numpy.typing import ArrayLike, NDArray
from scipy.special import gamma, rgamma

from fracspec.config import settings
from fracspec.exceptions import AccuracyError, DomainError
from fracspec.jacobi_core import (
    MIN_EXPONENT,
    JacobiBasisId,
    deriv_series_coeffs,
    eval_G_series,
)
from fracspec.logging import logger
from fracspec.model_params import FractionalModelParams, ladder_array
from fracspec.quadrature import gauss_jacobi_rule, integrate
from fracspec.types import Model, OperatorMode, PolyBasis

# Exponents closer than this are treated as the same weight
_EXPONENT_TOL = 1e-12


class Side(enum.Enum):
    """Side of a fractional integral."""

    #: Integrates over [0, x]
    Left = enum.auto()
    #: Integrates over [x, 1]
    Right = enum.auto()


@runtime_checkable
class WeightedIntegrand(Protocol):
    """``(1 - x)^a x^b`` times a smooth factor that can be evaluated."""

    @property
    def a(self) -> float: ...

    @property
    def b(self) -> float: ...

    def smooth(self, x: NDArray[np.float64]) -> NDArray[np.float64]: ...


@dataclass(frozen=True)
class WeightedPolyFunction:
    """
    ``g(x) = (1 - x)^a x^b p(x)`` with ``p`` a finite polynomial.

    ``p`` is either a Jacobi series in the ``(a, b)`` family or a power
    series, selected by ``basis``.
    """

    a: float
    b: float
    coeffs: tuple[float, ...]
    basis: PolyBasis = "jacobi"

    def __post_init__(self) -> None:
        if self.a < MIN_EXPONENT or self.b < MIN_EXPONENT:
            msg = f"Weight exponents must be > -1 (got a={self.a}, b={self.b})"
            raise DomainError(msg)
        if not all(math.isfinite(c) for c in self.coeffs):
            msg = "Polynomial coefficients must be finite"
            raise DomainError(msg)

    @classmethod
    def jacobi(cls, a: float, b: float, coeffs: ArrayLike) -> WeightedPolyFunction:
        return cls(a, b, tuple(float(c) for c in np.ravel(coeffs)), "jacobi")

    @classmethod
    def power(cls, a: float, b: float, coeffs: ArrayLike) -> WeightedPolyFunction:
        return cls(a, b, tuple(float(c) for c in np.ravel(coeffs)), "power")

    @classmethod
    def basis_element(
        cls, basis: JacobiBasisId, n: int, scale: float = 1.0
    ) -> WeightedPolyFunction:
        """``scale * rho^{(a,b)} G_n^{(a,b)}``."""
        coeffs = np.zeros(n + 1)
        coeffs[n] = scale
        return cls.jacobi(basis.a, basis.b, coeffs)

    @property
    def jacobi_basis(self) -> JacobiBasisId:
        return JacobiBasisId(self.a, self.b)

    def smooth(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        if self.basis == "jacobi":
            return np.asarray(eval_G_series(self.jacobi_basis, self.coeffs, x))
        return np.asarray(npoly.polyval(x, self.coeffs), dtype=float)

    def smooth_prime(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        if self.basis == "jacobi":
            d = deriv_series_coeffs(self.jacobi_basis, self.coeffs)
            return np.asarray(eval_G_series(self.jacobi_basis.shifted(1), d, x))
        d = npoly.polyder(np.asarray(self.coeffs)) if len(self.coeffs) > 1 else [0.0]
        return np.asarray(npoly.polyval(x, d), dtype=float)

    def derivative(self) -> WeightedDerivative:
        return WeightedDerivative(self)

    def __call__(self, x: ArrayLike) -> NDArray[np.float64] | float:
        xs = np.asarray(x, dtype=float)
        value = (1.0 - xs) ** self.a * xs**self.b * self.smooth(xs)
        return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class WeightedDerivative:
    """
    Derivative of a weighted polynomial, again of weighted form.

    ``D[(1-x)^a x^b p] = (1-x)^{a-1} x^{b-1} [b(1-x)p - a x p + x(1-x)p']``;
    an exponent that is already 0 stays 0 and its factor drops out.
    """

    parent: WeightedPolyFunction

    def __post_init__(self) -> None:
        for name, value in (("a", self.parent.a), ("b", self.parent.b)):
            if value != 0.0 and value - 1.0 < MIN_EXPONENT:
                msg = (
                    f"Derivative of a weight with exponent {name}={value} is not "
                    "integrable"
                )
                raise DomainError(msg)

    @property
    def a(self) -> float:
        return self.parent.a - 1.0 if self.parent.a != 0.0 else 0.0

    @property
    def b(self) -> float:
        return self.parent.b - 1.0 if self.parent.b != 0.0 else 0.0

    def smooth(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        pa, pb = self.parent.a, self.parent.b
        p = self.parent.smooth(x)
        dp = self.parent.smooth_prime(x)
        left = (1.0 - x) if pa != 0.0 else 1.0
        right = x if pb != 0.0 else 1.0
        return pb * left * p - pa * right * p + right * left * dp


Integrand = WeightedIntegrand | Sequence[WeightedIntegrand]


def _parts(g: Integrand) -> list[WeightedIntegrand]:
    if isinstance(g, WeightedIntegrand):
        return [g]
    return list(g)


def _check_sigma(sigma: float) -> None:
    if not 0.0 < sigma < 1.0:
        msg = f"Fractional order sigma must lie in (0, 1) (got {sigma})"
        raise DomainError(msg)


def _check_interior(x: float) -> float:
    if not 0.0 < x < 1.0:
        msg = f"Fractional integrals are evaluated at interior points (got x={x})"
        raise DomainError(msg)
    return float(x)


def _integrate_doubling(
    basis: JacobiBasisId, integrand: Callable[[NDArray[np.float64]], NDArray[np.float64]]
) -> float:
    order = settings.quad_order_initial
    previous = integrate(gauss_jacobi_rule(basis, order), integrand)
    while 2 * order <= settings.quad_order_cap:
        order *= 2
        current = integrate(gauss_jacobi_rule(basis, order), integrand)
        if abs(current - previous) <= settings.quad_doubling_tol * max(1.0, abs(current)):
            return current
        previous = current
    msg = (
        f"Quadrature did not settle below {settings.quad_doubling_tol:g} "
        f"by order {settings.quad_order_cap}"
    )
    raise AccuracyError(msg)


def _frac_integral_single(
    side: Side, sigma: float, g: WeightedIntegrand, x: float
) -> float:
    if side is Side.Left:
        # s = x t: weight (1 - t)^{sigma-1} t^b, smooth factor (1 - x t)^a p(x t)
        basis = JacobiBasisId(sigma - 1.0, g.b)

        def integrand(t: NDArray[np.float64]) -> NDArray[np.float64]:
            s = x * t
            return (1.0 - s) ** g.a * g.smooth(s)

        scale = x ** (sigma + g.b)
    else:
        # s = x + (1 - x) t: weight (1 - t)^a t^{sigma-1}, smooth factor s^b p(s)
        basis = JacobiBasisId(g.a, sigma - 1.0)

        def integrand(t: NDArray[np.float64]) -> NDArray[np.float64]:
            s = x + (1.0 - x) * t
            return s**g.b * g.smooth(s)

        scale = (1.0 - x) ** (sigma + g.a)
    return scale * _integrate_doubling(basis, integrand) / gamma(sigma)


def frac_integral(side: Side, sigma: float, g: Integrand, x: float) -> float:
    """Riemann-Liouville integral of order ``sigma`` of ``g`` from the given side."""
    _check_sigma(sigma)
    x = _check_interior(x)
    return sum(_frac_integral_single(side, sigma, part, x) for part in _parts(g))


def left_frac_integral(sigma: float, g: Integrand, x: float) -> float:
    """``(1/Gamma(sigma)) int_0^x (x - s)^{sigma-1} g(s) ds``."""
    return frac_integral(Side.Left, sigma, g, x)


def right_frac_integral(sigma: float, g: Integrand, x: float) -> float:
    """``(1/Gamma(sigma)) int_x^1 (s - x)^{sigma-1} g(s) ds``."""
    return frac_integral(Side.Right, sigma, g, x)


def apply_I_r(params: FractionalModelParams, g: Integrand, x: float) -> float:
    """``I_r^{2-alpha} g = r D^{-(2-alpha)} g + (1 - r) D^{-(2-alpha)*} g``."""
    value = 0.0
    if params.r > 0.0:
        value += params.r * left_frac_integral(params.sigma, g, x)
    if params.r < 1.0:
        value += (1.0 - params.r) * right_frac_integral(params.sigma, g, x)
    return value


def kernel_flux_constants(params: FractionalModelParams) -> tuple[float, float]:
    """
    ``D I_r`` of the two linear kernel functions.

    Returns:
        ``(D I_r[x rho], D I_r[(1 - x) rho])`` with ``rho`` the kernel weight
        ``(1-x)^{alpha-beta-1} x^{beta-1}``; equal to ``(mu_{-1}, -mu_{-1})``
    """
    mu = params.mu_minus_one
    return mu, -mu


# -- finite differences -------------------------------------------------------


def fd_step(x: float) -> float:
    """Finite-difference step at ``x``; the 5-point stencil stays inside (0, 1)."""
    if x < settings.fd_min_distance or x > 1.0 - settings.fd_min_distance:
        msg = (
            f"x={x} is within {settings.fd_min_distance:g} of an endpoint; "
            "finite differences are not available there"
        )
        raise DomainError(msg)
    return min(settings.fd_step, settings.fd_endpoint_fraction * min(x, 1.0 - x))


def first_derivative(fn: Callable[[float], float], x: float) -> float:
    h = fd_step(x)
    return (fn(x - 2 * h) - 8 * fn(x - h) + 8 * fn(x + h) - fn(x + 2 * h)) / (12 * h)


def second_derivative(fn: Callable[[float], float], x: float) -> float:
    h = fd_step(x)
    return (
        -fn(x - 2 * h) + 16 * fn(x - h) - 30 * fn(x) + 16 * fn(x + h) - fn(x + 2 * h)
    ) / (12 * h * h)


# -- fluxes and operators -----------------------------------------------------


class Decomposable(Protocol):
    """Something that knows its weighted parts and its closed forms."""

    def weighted_parts(self) -> list[WeightedIntegrand]: ...

    def derivative_parts(self) -> list[WeightedIntegrand]: ...

    def closed_form_flux(self, model: Model, x: ArrayLike) -> float | NDArray[np.float64]: ...

    def closed_form_operator(
        self, model: Model, x: ArrayLike
    ) -> float | NDArray[np.float64]: ...


Evaluable = Integrand | Decomposable


def _is_weighted(u: Evaluable) -> bool:
    if isinstance(u, WeightedIntegrand):
        return True
    return isinstance(u, Sequence) and all(isinstance(p, WeightedIntegrand) for p in u)


def _weighted_parts(u: Evaluable) -> list[WeightedIntegrand]:
    if _is_weighted(u):
        return _parts(u)  # type: ignore[arg-type]
    return u.weighted_parts()  # type: ignore[union-attr]


def _derivative_parts(u: Evaluable) -> list[WeightedIntegrand]:
    if _is_weighted(u):
        parts = []
        for part in _parts(u):  # type: ignore[arg-type]
            if not isinstance(part, WeightedPolyFunction):
                msg = "Only weighted polynomials can be differentiated in closed form"
                raise DomainError(msg)
            parts.append(part.derivative())
        return parts
    return u.derivative_parts()  # type: ignore[union-attr]


def _same(value: float, target: float) -> bool:
    return abs(value - target) <= _EXPONENT_TOL


def _closed_form_single(
    params: FractionalModelParams,
    model: Model,
    g: WeightedIntegrand,
    x: ArrayLike,
    *,
    flux: bool,
) -> NDArray[np.float64]:
    if not isinstance(g, WeightedPolyFunction) or g.basis != "jacobi":
        msg = "Closed forms exist only for Jacobi-weighted polynomials"
        raise DomainError(msg)
    d = np.asarray(g.coeffs)
    n = np.arange(d.size, dtype=float)
    alpha, beta = params.alpha, params.beta

    if _same(g.a, alpha - beta) and _same(g.b, beta):
        if flux:
            # -D I_r and -I_r D agree here since g vanishes at both ends
            mu = ladder_array(params, "mu", d.size - 1)
            shifted = np.concatenate(([0.0], mu * d))
            return -np.asarray(eval_G_series(params.flux_basis, shifted, x))
        lam = ladder_array(params, "lambda", d.size - 1)
        return np.asarray(eval_G_series(params.rhs_basis, lam * d, x))

    if model == "rl" and _same(g.a, alpha - beta - 1.0) and _same(g.b, beta - 1.0):
        if flux:
            # -D [sigma_n G_n^{(beta-1, alpha-beta-1)}]
            sig = ladder_array(params, "sigma", d.size - 1)
            weights = (sig * d * (n + alpha - 1.0))[1:]
            return -np.asarray(eval_G_series(params.rhs_basis, weights, x))
        kap = ladder_array(params, "kappa", d.size - 1)
        return np.asarray(eval_G_series(params.rl_rhs_basis, (kap * d)[2:], x))

    msg = (
        f"No closed form for the weight exponents (a={g.a}, b={g.b}) "
        f"under the {model} model"
    )
    raise DomainError(msg)


def _closed_form(
    params: FractionalModelParams, model: Model, u: Evaluable, x: ArrayLike, *, flux: bool
) -> float | NDArray[np.float64]:
    if _is_weighted(u):
        total = sum(
            _closed_form_single(params, model, part, x, flux=flux)
            for part in _parts(u)  # type: ignore[arg-type]
        )
        total = np.asarray(total, dtype=float)
        return float(total) if total.ndim == 0 else total
    if flux:
        return u.closed_form_flux(model, x)  # type: ignore[union-attr]
    return u.closed_form_operator(model, x)  # type: ignore[union-attr]


def apply_flux(
    params: FractionalModelParams,
    model: Model,
    u: Evaluable,
    x: float,
    *,
    mode: OperatorMode = "closed_form",
) -> float:
    """
    Flux of ``u``: ``-I_r D u`` for RLC, ``-D I_r u`` for RL.

    In ``closed_form`` mode the eigenvalue ladders are used (pure basis
    elements, or a solution's own decomposition). In ``verification`` mode the
    RLC flux is a quadrature of the weighted derivative and the RL flux is a
    finite difference of the quadrature-evaluated ``I_r u``.

    Raises:
        DomainError: If no closed form applies, or ``x`` is too close to an
            endpoint for finite differences
    """
    if mode == "closed_form":
        return float(_closed_form(params, model, u, x, flux=True))
    if model == "rlc":
        return -apply_I_r(params, _derivative_parts(u), _check_interior(x))
    parts = _weighted_parts(u)
    return -first_derivative(lambda s: apply_I_r(params, parts, s), x)


def apply_operator(
    params: FractionalModelParams,
    model: Model,
    u: Evaluable,
    x: float,
    *,
    mode: OperatorMode = "closed_form",
) -> float:
    """
    ``-D I_r D u`` (RLC) or ``-D^2 I_r u`` (RL) at ``x``.

    ``closed_form`` maps ``rho^{(alpha-beta,beta)} G_n`` to
    ``lambda_n G_n^{(beta,alpha-beta)}`` and, for RL,
    ``rho^{(alpha-beta-1,beta-1)} G_n`` to ``kappa_n G_{n-2}^{(beta+1,alpha-beta+1)}``
    (zero for n < 2). ``verification`` differentiates quadrature values.
    """
    if mode == "closed_form":
        return float(_closed_form(params, model, u, x, flux=False))
    if model == "rlc":
        parts = _derivative_parts(u)
        return -first_derivative(lambda s: apply_I_r(params, parts, s), x)
    parts = _weighted_parts(u)
    return -second_derivative(lambda s: apply_I_r(params, parts, s), x)


def lemma_coefficients(
    params: FractionalModelParams, n: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Power coefficients of the fractional integral of a weighted monomial.

    ``I_r[(1-x)^{alpha-beta-1} x^{beta-1} x^n] = sum_k a_k x^k`` and the mirror
    ``I_{1-r}[(1-x)^{beta-1} x^{alpha-beta-1} x^n] = sum_k b_k x^k``. The
    reciprocal gamma vanishes at its poles, which zeroes the low-order terms in
    the one-sided cases.

    Returns:
        ``(a, b)``, each of length ``n + 1`` in increasing powers
    """
    if n < 0:
        msg = f"Monomial degree must be nonnegative (got {n})"
        raise DomainError(msg)
    alpha, beta, c = params.alpha, params.beta, params.c_star_star
    k = np.arange(n + 1, dtype=float)
    common = (
        (-1.0) ** (n + 1)
        * c
        * (-1.0) ** k
        * gamma(alpha - 1.0 + k)
        * rgamma(n + 1.0 - k)
        * rgamma(k + 1.0)
    )
    a = common * gamma(alpha - beta) * rgamma(alpha - beta - n + k)
    b = common * gamma(beta) * rgamma(beta - n + k)
    logger.debug("Monomial integral coefficients n={n} a={a}", n=n, a=a.tolist())
    return a, b
