"""Spectral solutions of the two-sided RLC and RL boundary value problems.

A solution is kept in decomposed form: a regular series
``rho^{(alpha-beta, beta)} sum c_i G_i^{(alpha-beta, beta)}`` plus whatever the
boundary data add on top (kernel functions, an additive constant, or singular
endpoint terms for the RL model). Fluxes, operators and integrals of the
solution are then available in closed form.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace

import numpy as np
import sentry_sdk
from numpy.polynomial import polynomial as npoly
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.special import beta as beta_fn
from scipy.special import betainc

from fracspec.config import settings
from fracspec.exceptions import (
    CompatibilityError,
    DomainError,
    IllPosedError,
    IndexConventionError,
    QuadratureEvaluationError,
    SeriesDivergenceError,
)
from fracspec.frac_operators import (
    WeightedIntegrand,
    WeightedPolyFunction,
    apply_flux,
    apply_operator,
)
from fracspec.jacobi_core import (
    JacobiBasisId,
    G_at_one,
    G_at_zero,
    eval_G_column,
    eval_G_series,
    norm_sq_G,
)
from fracspec.logging import logger
from fracspec.model_params import FractionalModelParams, ladder_array
from fracspec.quadrature import gauss_jacobi_rule
from fracspec.types import (
    BCFamily,
    KernelName,
    Model,
    OperatorMode,
    PinMode,
    PosednessStatus,
    RHSKind,
)

# |c_N| / max |c_i| above this means the truncation has not resolved f
NON_DECAYED_TAIL = 0.1
# Points used to check the RL weak solution against its right-hand side
RL_WEAK_CHECK_POINTS = (0.2, 0.5, 0.8)
_EXPONENT_TOL = 1e-12
_FIRST_SERIES_BLOCK = 1024


def log_series_coefficients(n_max: int, *, mirrored: bool = False) -> NDArray[np.float64]:
    """
    Projection coefficients ``f_i = (-1)^i / (i log i)`` for ``i >= 2``.

    The weighted norm of this right-hand side is finite while the flux
    constant series of the one-sided problem grows like ``log log N``. The
    mirrored sequence drops the alternating sign and plays the same role for
    the flux at ``x = 1``.
    """
    f = np.zeros(max(n_max + 1, 0))
    if n_max < 2:
        return f
    i = np.arange(2, n_max + 1, dtype=float)
    values = 1.0 / (i * np.log(i))
    if not mirrored:
        values = values * np.where(np.mod(i, 2) == 1, -1.0, 1.0)
    f[2:] = values
    return f


@dataclass(frozen=True)
class RHSSpec:
    """The right-hand side ``f`` of the boundary value problem."""

    kind: RHSKind
    value: float = 0.0
    coeffs: tuple[float, ...] = ()
    mirrored: bool = False
    fn: Callable[[NDArray[np.float64]], ArrayLike] | None = field(
        default=None, compare=False
    )

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) or not all(math.isfinite(c) for c in self.coeffs):
            msg = "Right-hand side parameters must be finite"
            raise DomainError(msg)
        if self.kind == "callable" and self.fn is None:
            msg = "A callable right-hand side needs a function"
            raise DomainError(msg)
        if self.kind == "monomial" and self.value < 0.0:
            msg = f"Monomial power must be nonnegative (got {self.value})"
            raise DomainError(msg)

    @classmethod
    def from_callable(cls, fn: Callable[[NDArray[np.float64]], ArrayLike]) -> RHSSpec:
        """``fn`` is called with arrays of points and must be vectorised."""
        return cls("callable", fn=fn)

    @classmethod
    def jacobi(cls, coeffs: ArrayLike) -> RHSSpec:
        """``f = sum d_n G_n^{(beta, alpha-beta)}`` with expansion coefficients ``d_n``."""
        return cls("jacobi", coeffs=tuple(float(c) for c in np.ravel(coeffs)))

    @classmethod
    def constant(cls, c: float) -> RHSSpec:
        return cls("constant", value=float(c))

    @classmethod
    def monomial(cls, p: float) -> RHSSpec:
        return cls("monomial", value=float(p))

    @classmethod
    def polynomial(cls, coeffs: ArrayLike) -> RHSSpec:
        """Power-basis coefficients in increasing degree."""
        return cls("polynomial", coeffs=tuple(float(c) for c in np.ravel(coeffs)))

    @classmethod
    def log_series(cls, *, mirrored: bool = False) -> RHSSpec:
        return cls("log_series", mirrored=mirrored)

    def evaluate(
        self, params: FractionalModelParams, x: ArrayLike, n: int | None = None
    ) -> NDArray[np.float64]:
        xs = np.asarray(x, dtype=float)
        match self.kind:
            case "callable":
                values = np.asarray(self.fn(xs), dtype=float)  # type: ignore[misc]
            case "constant":
                values = np.full_like(xs, self.value)
            case "monomial":
                values = xs**self.value
            case "polynomial":
                values = np.asarray(npoly.polyval(xs, self.coeffs or (0.0,)), dtype=float)
            case "jacobi":
                values = np.asarray(eval_G_series(params.rhs_basis, self.coeffs, xs))
            case "log_series":
                n = settings.default_truncation if n is None else n
                f = log_series_coefficients(n, mirrored=self.mirrored)
                d = f / norm_sq_G(params.rhs_basis, np.arange(n + 1))
                values = np.asarray(eval_G_series(params.rhs_basis, d, xs))
        return np.broadcast_to(values, xs.shape).astype(float)


@dataclass(frozen=True)
class SpectralRHS:
    """Projections ``f_i = int rho^{(beta, alpha-beta)} f G_i`` for ``i <= n``."""

    params: FractionalModelParams
    n: int
    coeffs: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.coeffs.shape != (self.n + 1,):
            msg = f"Expected {self.n + 1} projection coefficients, got {self.coeffs.shape}"
            raise DomainError(msg)
        if not np.all(np.isfinite(self.coeffs)):
            msg = "Projection coefficients must be finite"
            raise DomainError(msg)

    @property
    def expansion(self) -> NDArray[np.float64]:
        """Coefficients of ``f_N = sum (f_i / ||G_i||^2) G_i``."""
        return self.coeffs / norm_sq_G(self.params.rhs_basis, np.arange(self.n + 1))


@dataclass(frozen=True)
class SingularTerm:
    """``amplitude * (1 - x)^p * x^q``."""

    amplitude: float
    p: float
    q: float

    def matches(self, p: float, q: float) -> bool:
        return abs(self.p - p) <= _EXPONENT_TOL and abs(self.q - q) <= _EXPONENT_TOL

    def __call__(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.amplitude * (1.0 - x) ** self.p * x**self.q


class BoundaryConditionSpec(BaseModel):
    """
    Boundary data. ``left`` is imposed at ``x = 0`` and ``right`` at ``x = 1``.

    What the values mean depends on the family: values, fluxes, or for the RL
    families the weighted limits ``x^{1-beta} u`` at 0 and
    ``(1-x)^{1+beta-alpha} u`` at 1.
    """

    model_config = ConfigDict(frozen=True)

    family: BCFamily
    left: float = 0.0
    right: float = 0.0

    @field_validator("left", "right")
    @classmethod
    def finite_value(cls, v: float) -> float:
        if not math.isfinite(v):
            msg = "Boundary values must be finite"
            raise ValueError(msg)
        return v


class WellPosednessReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: PosednessStatus
    rule: str
    compatibility_residual: float | None = None


@dataclass(frozen=True)
class SpectralSolution:
    """A solution in decomposed form; immutable once built."""

    model: Model
    params: FractionalModelParams
    bc: BoundaryConditionSpec
    rhs: SpectralRHS
    regular_coeffs: NDArray[np.float64]
    singular_terms: tuple[SingularTerm, ...] = ()
    kernel_amplitudes: tuple[float, float] = (0.0, 0.0)
    additive_constant: float = 0.0
    gauge_free: bool = False
    series_tail: float = 0.0

    @property
    def tail_ratio(self) -> float:
        magnitude = np.abs(self.regular_coeffs)
        top = float(magnitude.max(initial=0.0))
        return float(magnitude[-1]) / top if top > 0.0 else 0.0

    def regular_part(self, x: ArrayLike) -> NDArray[np.float64]:
        xs = np.asarray(x, dtype=float)
        basis = self.params.solution_basis
        return (1.0 - xs) ** basis.a * xs**basis.b * np.asarray(
            eval_G_series(basis, self.regular_coeffs, xs)
        )

    def _singular_limit(self, at_one: bool) -> float:
        # Most negative exponent with a nonzero net amplitude decides the sign
        blowing_up: dict[float, float] = {}
        finite = 0.0
        for term in self.singular_terms:
            exponent = term.p if at_one else term.q
            if exponent < -_EXPONENT_TOL:
                key = round(exponent, 12)
                blowing_up[key] = blowing_up.get(key, 0.0) + term.amplitude
            elif abs(exponent) <= _EXPONENT_TOL:
                finite += term.amplitude
        for key in sorted(blowing_up):
            if blowing_up[key] != 0.0:
                return math.copysign(math.inf, blowing_up[key])
        return finite

    def evaluate(self, x: ArrayLike) -> float | NDArray[np.float64]:
        """
        Value of the solution; singular endpoint limits come back as ``+-inf``.
        """
        xs = np.asarray(x, dtype=float)
        c0, c1 = self.kernel_amplitudes
        total = self.regular_part(xs) + self.additive_constant
        if c0 or c1:
            total = total + c0 * kernel_k(self.params, "k0", xs)
            total = total + c1 * kernel_k(self.params, "k1", xs)
        if self.singular_terms:
            singular = sum(term(xs) for term in self.singular_terms)
            singular = np.where(xs == 0.0, self._singular_limit(at_one=False), singular)
            singular = np.where(xs == 1.0, self._singular_limit(at_one=True), singular)
            total = total + singular
        total = np.asarray(total, dtype=float)
        return float(total) if total.ndim == 0 else total

    def __call__(self, x: ArrayLike) -> float | NDArray[np.float64]:
        return self.evaluate(x)

    def _require_closed_form(self, model: Model) -> None:
        if model == "rl" and (any(self.kernel_amplitudes) or self.additive_constant):
            msg = "RL closed forms do not cover kernel functions or constants"
            raise DomainError(msg)
        if model == "rlc" and self.singular_terms:
            msg = "RLC closed forms do not cover singular endpoint terms"
            raise DomainError(msg)

    def closed_form_flux(
        self, model: Model, x: ArrayLike
    ) -> float | NDArray[np.float64]:
        """Flux from the ladders; the regular part is ``-sum mu_i c_i G_{i+1}``."""
        self._require_closed_form(model)
        params = self.params
        mu = ladder_array(params, "mu", self.regular_coeffs.size - 1)
        weights = np.concatenate(([0.0], mu * self.regular_coeffs))
        flux = -np.asarray(eval_G_series(params.flux_basis, weights, x))

        c0, c1 = self.kernel_amplitudes
        sigma0 = params.ladder("sigma", 0)
        constant = sigma0 * (c0 - c1)
        alpha, beta = params.alpha, params.beta
        for term in self.singular_terms:
            if term.matches(alpha - beta - 1.0, beta):
                constant -= params.mu_minus_one * term.amplitude
            elif term.matches(alpha - beta, beta - 1.0):
                constant += params.mu_minus_one * term.amplitude
            elif not term.matches(alpha - beta - 1.0, beta - 1.0):
                msg = f"No closed-form flux for the term (1-x)^{term.p} x^{term.q}"
                raise DomainError(msg)
        flux = flux + constant
        return float(flux) if flux.ndim == 0 else flux

    def closed_form_operator(
        self, model: Model, x: ArrayLike
    ) -> float | NDArray[np.float64]:
        """``sum lambda_i c_i G_i^{(beta, alpha-beta)}``; the other parts lie in the kernel."""
        self._require_closed_form(model)
        lam = ladder_array(self.params, "lambda", self.regular_coeffs.size - 1)
        value = np.asarray(
            eval_G_series(self.params.rhs_basis, lam * self.regular_coeffs, x)
        )
        return float(value) if value.ndim == 0 else value

    def weighted_parts(self) -> list[WeightedIntegrand]:
        if any(self.kernel_amplitudes):
            msg = "Kernel functions are not weighted polynomials; use derivative_parts"
            raise DomainError(msg)
        basis = self.params.solution_basis
        parts: list[WeightedIntegrand] = [
            WeightedPolyFunction.jacobi(basis.a, basis.b, self.regular_coeffs)
        ]
        parts.extend(
            WeightedPolyFunction.power(t.p, t.q, [t.amplitude]) for t in self.singular_terms
        )
        if self.additive_constant:
            parts.append(WeightedPolyFunction.power(0.0, 0.0, [self.additive_constant]))
        return parts

    def derivative_parts(self) -> list[WeightedIntegrand]:
        basis = self.params.solution_basis
        kernel = self.params.kernel_basis
        parts: list[WeightedIntegrand] = [
            WeightedPolyFunction.jacobi(basis.a, basis.b, self.regular_coeffs).derivative()
        ]
        c0, c1 = self.kernel_amplitudes
        if c0 or c1:
            # D k0 = -rho, D k1 = rho
            parts.append(WeightedPolyFunction.power(kernel.a, kernel.b, [c1 - c0]))
        parts.extend(
            WeightedPolyFunction.power(t.p, t.q, [t.amplitude]).derivative()
            for t in self.singular_terms
        )
        return parts


# -- building blocks ----------------------------------------------------------


def _truncation(n: int | None) -> int:
    n = settings.default_truncation if n is None else n
    if n < 0:
        msg = f"Truncation degree must be nonnegative (got {n})"
        raise DomainError(msg)
    return n


def _weighted_projection(
    params: FractionalModelParams, rhs: RHSSpec, basis: JacobiBasisId, n: int
) -> NDArray[np.float64]:
    rule = gauss_jacobi_rule(basis, n + 1 + settings.projection_extra_order)
    values = rhs.evaluate(params, rule.nodes, n)
    bad = ~np.isfinite(values)
    if bad.any():
        node = float(rule.nodes[np.argmax(bad)])
        msg = f"Right-hand side is not finite at quadrature node x={node!r}"
        raise QuadratureEvaluationError(msg, node)
    column = eval_G_column(basis, n, rule.nodes)
    return column @ (rule.weights * values)


def project_rhs(
    params: FractionalModelParams, rhs: RHSSpec, n: int | None = None
) -> SpectralRHS:
    """
    Project ``f`` onto ``G_0, ..., G_n`` of the ``(beta, alpha-beta)`` family.

    Jacobi and log-series right-hand sides are converted exactly; everything
    else goes through a Gauss-Jacobi rule with ``n + 1 + projection_extra_order``
    nodes, exact for polynomial ``f`` of degree up to ``n``.

    Raises:
        DomainError: If ``n`` is negative
        QuadratureEvaluationError: If ``f`` is not finite at a node
    """
    n = _truncation(n)
    basis = params.rhs_basis
    if rhs.kind == "jacobi":
        d = np.zeros(n + 1)
        kept = rhs.coeffs[: n + 1]
        d[: len(kept)] = kept
        coeffs = d * norm_sq_G(basis, np.arange(n + 1))
    elif rhs.kind == "log_series":
        coeffs = log_series_coefficients(n, mirrored=rhs.mirrored)
    else:
        coeffs = _weighted_projection(params, rhs, basis, n)
    return SpectralRHS(params=params, n=n, coeffs=np.asarray(coeffs, dtype=float))


def solve_regular(params: FractionalModelParams, rhs: SpectralRHS) -> NDArray[np.float64]:
    """``c_i = f_i / (lambda_i ||G_i^{(beta, alpha-beta)}||^2)``."""
    i = np.arange(rhs.n + 1)
    lam = ladder_array(params, "lambda", rhs.n)
    return rhs.coeffs / (lam * norm_sq_G(params.rhs_basis, i))


def kernel_k(
    params: FractionalModelParams, which: KernelName, x: ArrayLike
) -> float | NDArray[np.float64]:
    """
    Kernel functions of the RLC operator.

    ``k1(x) = int_0^x rho^{(alpha-beta-1, beta-1)}`` and
    ``k0(x) = int_x^1 rho^{(alpha-beta-1, beta-1)}``, written as regularized
    incomplete beta functions; ``k0 + k1 = B(beta, alpha - beta)``.
    """
    xs = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xs)) or np.any(xs < 0.0) or np.any(xs > 1.0):
        msg = "Kernel functions are defined on [0, 1]"
        raise DomainError(msg)
    alpha, beta = params.alpha, params.beta
    complete = beta_fn(beta, alpha - beta)
    if which == "k1":
        value = complete * betainc(beta, alpha - beta, xs)
    else:
        value = complete * betainc(alpha - beta, beta, 1.0 - xs)
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def rhs_integral(
    params: FractionalModelParams, rhs: RHSSpec, n: int | None = None
) -> tuple[float, float]:
    """``(int_0^1 f, int_0^1 |f|)`` by Gauss-Legendre quadrature."""
    n = _truncation(n)
    order = max(settings.integration_order, n + 1 + settings.projection_extra_order)
    rule = gauss_jacobi_rule(JacobiBasisId(0.0, 0.0), order)
    values = rhs.evaluate(params, rule.nodes, n)
    if not np.all(np.isfinite(values)):
        node = float(rule.nodes[np.argmax(~np.isfinite(values))])
        msg = f"Right-hand side is not finite at quadrature node x={node!r}"
        raise QuadratureEvaluationError(msg, node)
    return float(rule.weights @ values), float(rule.weights @ np.abs(values))


def solution_integral(sol: SpectralSolution) -> float:
    """``int_0^1 u`` from beta integrals; only ``c_0`` survives orthogonality."""
    alpha, beta = sol.params.alpha, sol.params.beta
    total = sol.additive_constant
    if sol.regular_coeffs.size:
        total += sol.regular_coeffs[0] * beta_fn(beta + 1.0, alpha - beta + 1.0)
    c0, c1 = sol.kernel_amplitudes
    total += c0 * beta_fn(beta + 1.0, alpha - beta)
    total += c1 * beta_fn(beta, alpha - beta + 1.0)
    for term in sol.singular_terms:
        total += term.amplitude * beta_fn(term.q + 1.0, term.p + 1.0)
    return float(total)


# -- flux-constant series -----------------------------------------------------


@dataclass(frozen=True)
class SeriesSum:
    """``sum_i mu_i c_i G_{i+1}^{(beta-1, alpha-beta-1)}`` at one endpoint."""

    value: float
    tail: float
    terms: int


def flux_series_terms(
    params: FractionalModelParams, coeffs: NDArray[np.float64], at_one: bool = False
) -> NDArray[np.float64]:
    """Terms ``mu_i c_i G_{i+1}^{(beta-1, alpha-beta-1)}(e)`` at the endpoint ``e``."""
    n_max = coeffs.size - 1
    mu = ladder_array(params, "mu", n_max)
    j = np.arange(1, n_max + 2)
    endpoint = G_at_one if at_one else G_at_zero
    return mu * coeffs * np.asarray(endpoint(params.flux_basis, j))


def _tail_estimate(terms: NDArray[np.float64]) -> float:
    """
    Remainder estimate from the last half of the terms.

    Terms decaying like ``i^{-p}`` with ``p > 1`` leave a remainder of about
    ``block / (2^{p-1} - 1)``; slower decay gives ``inf``.
    """
    n = terms.size
    if n == 0:
        return 0.0
    block = np.abs(terms[n // 2 :])
    block_sum = float(block.sum())
    if block_sum <= settings.series_tol:
        return block_sum
    idx = np.arange(n // 2, n, dtype=float) + 1.0
    keep = block > 0.0
    if keep.sum() < 2:
        return block_sum
    slope, _ = np.polyfit(np.log(idx[keep]), np.log(block[keep]), 1)
    p = -float(slope)
    if p <= 1.0:
        return math.inf
    return block_sum / (2.0 ** (p - 1.0) - 1.0)


def _dyadic_partial_sums(partial: NDArray[np.float64]) -> dict[int, float]:
    sums = {}
    n = 16
    while n < partial.size:
        sums[n] = float(partial[n])
        n *= 2
    return sums


def flux_series_sum(
    params: FractionalModelParams,
    coeffs: ArrayLike | Callable[[NDArray[np.float64]], ArrayLike],
    *,
    at_one: bool = False,
    force: bool = False,
) -> SeriesSum:
    """
    Sum the flux-constant series at ``x = 0`` (or ``x = 1``).

    A finite coefficient array is summed in full; if its tail estimate still
    exceeds ``series_tol`` a warning is logged. A callable mapping indices to
    coefficients is summed in doubling blocks until the tail estimate drops
    below ``series_tol``.

    Raises:
        IllPosedError: If ``r = 1`` (or ``r = 0`` for the flux at 1) unless
            ``force`` is set
        SeriesDivergenceError: If a callable series is still unsettled after
            ``series_max_terms`` terms
    """
    one_sided = params.r <= 0.0 if at_one else params.r >= 1.0
    if one_sided and not force:
        report = WellPosednessReport(
            status="IllPosed",
            rule="flux-constant series of a one-sided operator need not converge",
        )
        raise IllPosedError(report)

    if not callable(coeffs):
        c = np.asarray(coeffs, dtype=float)
        terms = flux_series_terms(params, c, at_one)
        tail = _tail_estimate(terms)
        if tail > settings.series_tol:
            logger.warning(
                "Flux-constant series tail not settled tail={tail} terms={terms}",
                tail=tail,
                terms=terms.size,
            )
        return SeriesSum(float(terms.sum()), tail, terms.size)

    n = min(_FIRST_SERIES_BLOCK, settings.series_max_terms)
    while True:
        c = np.asarray(coeffs(np.arange(n, dtype=float)), dtype=float)
        terms = flux_series_terms(params, c, at_one)
        partial = np.cumsum(terms)
        tail = _tail_estimate(terms)
        logger.debug("Flux-constant series block terms={n} tail={tail}", n=n, tail=tail)
        if tail <= settings.series_tol:
            return SeriesSum(float(partial[-1]), tail, n)
        if n >= settings.series_max_terms:
            msg = (
                f"Flux-constant series did not settle within {n} terms "
                f"(tail estimate {tail:.3e})"
            )
            raise SeriesDivergenceError(msg, _dyadic_partial_sums(partial))
        n = min(2 * n, settings.series_max_terms)


def flux_constant_series(
    params: FractionalModelParams,
    coeffs: ArrayLike | Callable[[NDArray[np.float64]], ArrayLike],
    A: float,
    variant: Model,
    *,
    force: bool = False,
) -> float:
    """
    The kernel amplitude ``C1`` that makes the flux at ``x = 0`` equal ``A``.

    RLC: ``C1 = (A + S) / sigma_0``; RL: ``C1 = -(A + S) / mu_{-1}``, with ``S``
    the flux-constant series.
    """
    s = flux_series_sum(params, coeffs, force=force).value
    if variant == "rlc":
        return (A + s) / params.ladder("sigma", 0)
    return -(A + s) / params.mu_minus_one


# -- classification -----------------------------------------------------------


def classify(
    params: FractionalModelParams, model: Model, bc: BoundaryConditionSpec
) -> WellPosednessReport:
    """
    Well-posedness of ``(model, boundary data, r)`` without solving.

    Raises:
        DomainError: If an RL-only family is paired with the RLC model
    """
    r = params.r
    family = bc.family
    if model == "rlc" and family in ("rl_weighted_dirichlet", "rl_mixed"):
        msg = f"Boundary family {family} applies to the RL model only"
        raise DomainError(msg)

    def report(status: PosednessStatus, rule: str) -> WellPosednessReport:
        return WellPosednessReport(status=status, rule=rule)

    match family:
        case "dirichlet" if model == "rlc":
            return report(
                "WellPosed", "Dirichlet data fix both kernel amplitudes for every r"
            )
        case "dirichlet":
            if bc.left == 0.0 and bc.right == 0.0:
                return report(
                    "WellPosed",
                    "homogeneous Dirichlet data: the RL and RLC problems coincide",
                )
            return report(
                "RequiresSingularBC",
                "RL solutions are singular at the endpoints; nonzero Dirichlet data "
                "must be imposed as weighted limits",
            )
        case "mixed_flux_dirichlet" | "rl_mixed":
            if model == "rl" and family == "mixed_flux_dirichlet" and bc.right != 0.0:
                return report(
                    "RequiresSingularBC",
                    "RL solutions are singular at x = 1; a nonzero value there must be "
                    "imposed as a weighted limit",
                )
            if r >= 1.0:
                return report(
                    "IllPosed",
                    "flux data at x = 0 with r = 1: the flux-constant series diverges "
                    "for admissible f, so the problem is not well posed",
                )
            return report("WellPosed", "flux at x = 0 and a value at x = 1 with r < 1")
        case "neumann":
            if r <= 0.0 or r >= 1.0:
                return report(
                    "IllPosed",
                    "Neumann data with a one-sided operator (r = 0 or r = 1): a "
                    "flux-constant series diverges, so the problem is not well posed",
                )
            return report(
                "WellPosedUpToConstant",
                "Neumann data with 0 < r < 1: unique up to the free kernel direction "
                "once B - A = int f",
            )
        case "rl_weighted_dirichlet":
            return report(
                "WellPosed", "weighted endpoint limits fix both singular amplitudes"
            )
    msg = f"Unknown boundary family {family!r}"
    raise DomainError(msg)


# -- solve --------------------------------------------------------------------


def _check_compatibility(
    params: FractionalModelParams,
    rhs: RHSSpec,
    n: int,
    bc: BoundaryConditionSpec,
    report: WellPosednessReport,
) -> WellPosednessReport:
    integral, abs_integral = rhs_integral(params, rhs, n)
    residual = abs(bc.right - bc.left - integral)
    tolerance = settings.compat_rtol * (
        1.0 + abs(bc.left) + abs(bc.right) + abs_integral
    )
    report = report.model_copy(update={"compatibility_residual": residual})
    if residual > tolerance:
        raise CompatibilityError(residual, tolerance, report)
    return report


def _regular(
    model: Model,
    params: FractionalModelParams,
    bc: BoundaryConditionSpec,
    spectral: SpectralRHS,
    coeffs: NDArray[np.float64],
) -> SpectralSolution:
    return SpectralSolution(
        model=model, params=params, bc=bc, rhs=spectral, regular_coeffs=coeffs
    )


def _solve_rlc(sol: SpectralSolution, pin: PinMode) -> SpectralSolution:
    params, bc, c = sol.params, sol.bc, sol.regular_coeffs
    sigma0 = params.ladder("sigma", 0)
    match bc.family:
        case "dirichlet":
            # k0(0) = k1(1) = B(beta, alpha - beta), k1(0) = k0(1) = 0
            complete = beta_fn(params.beta, params.alpha - params.beta)
            return _with(sol, kernel_amplitudes=(bc.left / complete, bc.right / complete))
        case "mixed_flux_dirichlet":
            series = flux_series_sum(params, c)
            c1 = (bc.left + series.value) / sigma0
            return _with(
                sol,
                kernel_amplitudes=(c1, 0.0),
                additive_constant=bc.right,
                series_tail=series.tail,
            )
        case "neumann":
            series = flux_series_sum(params, c)
            c1 = (bc.left + series.value) / sigma0
            solved = _with(
                sol, kernel_amplitudes=(c1, 0.0), gauge_free=True, series_tail=series.tail
            )
            if pin == "mean_zero":
                solved = _with(solved, additive_constant=-solution_integral(solved))
            return solved
    msg = f"Boundary family {bc.family} applies to the RL model only"
    raise DomainError(msg)


def _solve_rl(sol: SpectralSolution, pin: PinMode) -> SpectralSolution:
    params, bc, c = sol.params, sol.bc, sol.regular_coeffs
    alpha, beta = params.alpha, params.beta
    match bc.family:
        case "dirichlet":
            return sol
        case "rl_weighted_dirichlet":
            terms = (
                SingularTerm(bc.left, alpha - beta, beta - 1.0),
                SingularTerm(bc.right, alpha - beta - 1.0, beta),
            )
            return _with(sol, singular_terms=terms)
        case "mixed_flux_dirichlet" | "rl_mixed":
            series = flux_series_sum(params, c)
            c1 = -(bc.left + series.value) / params.mu_minus_one
            terms = (
                SingularTerm(c1, alpha - beta - 1.0, beta),
                SingularTerm(bc.right - c1, alpha - beta - 1.0, beta - 1.0),
            )
            return _with(sol, singular_terms=terms, series_tail=series.tail)
        case "neumann":
            series = flux_series_sum(params, c)
            c1 = -(bc.left + series.value) / params.mu_minus_one
            solved = _with(
                sol,
                singular_terms=(SingularTerm(c1, alpha - beta - 1.0, beta),),
                gauge_free=True,
                series_tail=series.tail,
            )
            if pin == "mean_zero":
                c3 = -solution_integral(solved) / beta_fn(beta, alpha - beta)
                free = SingularTerm(c3, alpha - beta - 1.0, beta - 1.0)
                solved = _with(solved, singular_terms=(*solved.singular_terms, free))
            return solved
    msg = f"Unknown boundary family {bc.family!r}"
    raise DomainError(msg)


def _with(sol: SpectralSolution, **changes: object) -> SpectralSolution:
    return replace(sol, **changes)  # type: ignore[arg-type]


def solve(
    params: FractionalModelParams,
    model: Model,
    bc: BoundaryConditionSpec,
    rhs: RHSSpec,
    n: int | None = None,
    *,
    pin: PinMode = "zero",
) -> tuple[SpectralSolution, WellPosednessReport]:
    """
    Solve the boundary value problem and classify it.

    Args:
        params: Condition A parameters
        model: ``"rlc"`` or ``"rl"``
        bc: Boundary data
        rhs: Right-hand side ``f``
        n: Truncation degree, ``settings.default_truncation`` by default
        pin: Gauge of the free direction for Neumann data

    Returns:
        The decomposed solution and its well-posedness report

    Raises:
        IllPosedError: For ill-posed data or data that need singular
            (weighted) boundary conditions
        CompatibilityError: If Neumann data violate ``B - A = int f``
        DomainError: If the family does not apply to the model
    """
    n = _truncation(n)
    report = classify(params, model, bc)
    sentry_sdk.add_breadcrumb(
        category="solve",
        message="Classified boundary value problem",
        level="info",
        data={"model": model, "family": bc.family, "r": params.r, "status": report.status},
    )
    if report.status in ("IllPosed", "RequiresSingularBC"):
        logger.warning(
            "Rejected problem model={model} family={family} status={status}",
            model=model,
            family=bc.family,
            status=report.status,
        )
        raise IllPosedError(report)
    if bc.family == "neumann":
        report = _check_compatibility(params, rhs, n, bc, report)

    spectral = project_rhs(params, rhs, n)
    base = _regular(model, params, bc, spectral, solve_regular(params, spectral))
    sol = _solve_rlc(base, pin) if model == "rlc" else _solve_rl(base, pin)

    if sol.tail_ratio > NON_DECAYED_TAIL:
        logger.warning(
            "Truncation has not resolved f n={n} tail_ratio={ratio}",
            n=n,
            ratio=sol.tail_ratio,
        )
    logger.info(
        "Solved model={model} family={family} status={status} n={n}",
        model=model,
        family=bc.family,
        status=report.status,
        n=n,
    )
    return sol, report


# -- RL weak solution ---------------------------------------------------------


def solve_rl_weak(
    params: FractionalModelParams,
    rhs: RHSSpec,
    n: int | None = None,
    *,
    verify: bool = True,
) -> NDArray[np.float64]:
    """
    Coefficients ``w_i`` of ``w = rho^{(alpha-beta-1, beta-1)} sum_{i>=2} w_i G_i``.

    The RL operator maps ``rho^{(alpha-beta-1, beta-1)} G_i`` to
    ``kappa_i G_{i-2}^{(beta+1, alpha-beta+1)}``, so mode ``m`` of ``f`` in that
    family fixes ``w_{m+2}``. Entries 0 and 1 are zero.

    Raises:
        IndexConventionError: If the finite-difference operator of ``w``
            misses the projected right-hand side at the check points
    """
    n = _truncation(n)
    w = np.zeros(n + 1)
    if n < 2:
        return w
    basis = params.rl_rhs_basis
    proj = _weighted_projection(params, rhs, basis, n - 2)
    m = np.arange(n - 1)
    kappa = ladder_array(params, "kappa", n)[2:]
    w[2:] = proj / (kappa * norm_sq_G(basis, m))

    if verify:
        kernel = params.kernel_basis
        u = WeightedPolyFunction.jacobi(kernel.a, kernel.b, w)
        expansion = proj / norm_sq_G(basis, m)
        for x in RL_WEAK_CHECK_POINTS:
            got = apply_operator(params, "rl", u, x, mode="verification")
            want = float(eval_G_series(basis, expansion, x))
            error = abs(got - want)
            if error > settings.rl_weak_residual_tol * max(1.0, abs(want)):
                msg = (
                    f"RL weak solution residual {error:.3e} at x={x}; "
                    "the basis index mapping does not reproduce f"
                )
                raise IndexConventionError(msg)
    return w


# -- evaluation ---------------------------------------------------------------


def evaluate(sol: SpectralSolution, x: ArrayLike) -> float | NDArray[np.float64]:
    return sol.evaluate(x)


def evaluate_flux(
    sol: SpectralSolution, x: ArrayLike, *, mode: OperatorMode = "closed_form"
) -> float | NDArray[np.float64]:
    """Flux of the solution under its own model."""
    if mode == "closed_form":
        return sol.closed_form_flux(sol.model, x)
    xs = np.asarray(x, dtype=float)
    values = np.array(
        [apply_flux(sol.params, sol.model, sol, float(p), mode=mode) for p in xs.ravel()]
    ).reshape(xs.shape)
    return float(values) if values.ndim == 0 else values

