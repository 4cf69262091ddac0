"""Regularity and well-posedness diagnostics.

Function-space statements about the solution are recast as computable
statements about coefficients: decay rates, weighted tail norms, block sums of
the flux-constant series, and pointwise identity checks against the
quadrature oracle.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from fracspec.exceptions import DomainError, UndefinedRateError
from fracspec.frac_operators import (
    WeightedPolyFunction,
    apply_flux,
    apply_I_r,
    apply_operator,
    lemma_coefficients,
)
from fracspec.jacobi_core import (
    G_at_one,
    G_at_zero,
    JacobiBasisId,
    eval_G,
    gamma_ratio,
    norm_sq_G,
)
from fracspec.logging import logger
from fracspec.model_params import FractionalModelParams, ladder_array
from fracspec.spectral_solver import (
    NON_DECAYED_TAIL,
    RHSSpec,
    SpectralRHS,
    SpectralSolution,
    flux_series_terms,
    log_series_coefficients,
    project_rhs,
    solve_regular,
)
from fracspec.types import Model, OperatorMode, ProbeVariant

MIN_FIT_POINTS = 8
QUADRATURE_TOL = 1e-8
FINITE_DIFFERENCE_TOL = 1e-5
DEFAULT_POINTS = tuple(np.linspace(0.1, 0.9, 9))
MONOMIAL_POINTS = tuple(np.linspace(0.125, 0.875, 7))
MONOMIAL_MAX_DEGREE = 5
# Dyadic block increments decaying faster than k^-1.5 are summable
SUMMABLE_SLOPE = -1.5
_RELATIVE_SLACK = 1e-10


@dataclass(frozen=True)
class DecayReport:
    """Fit of ``|c_i| ~ C i^{-rate}`` over ``[i_min, i_max]``."""

    rate: float
    i_min: int
    i_max: int
    residual: float
    tail_ratio: float


def decay_rate(
    coeffs: ArrayLike, i_min: int | None = None, i_max: int | None = None
) -> DecayReport:
    """
    Least-squares slope of ``log |c_i|`` against ``log i``.

    The window defaults to ``[N // 2, N]``; zero entries are skipped.

    Raises:
        DomainError: If the window is empty or outside ``[1, N]``
        UndefinedRateError: If fewer than 8 nonzero entries fall in the window
    """
    c = np.abs(np.asarray(coeffs, dtype=float))
    n = c.size - 1
    lo = max(n // 2, 1) if i_min is None else i_min
    hi = n if i_max is None else i_max
    if lo < 1 or hi > n or lo > hi:
        msg = f"Fit window [{lo}, {hi}] must lie within [1, {n}]"
        raise DomainError(msg)

    idx = np.arange(lo, hi + 1)
    window = c[lo : hi + 1]
    keep = np.isfinite(window) & (window > 0.0)
    if keep.sum() < MIN_FIT_POINTS:
        msg = (
            f"Only {int(keep.sum())} nonzero coefficients in [{lo}, {hi}]; "
            f"a decay rate needs {MIN_FIT_POINTS}"
        )
        raise UndefinedRateError(msg)

    log_i = np.log(idx[keep])
    log_c = np.log(window[keep])
    fit = np.polyfit(log_i, log_c, 1)
    residual = float(np.sqrt(np.mean((np.polyval(fit, log_i) - log_c) ** 2)))
    top = float(c.max())
    return DecayReport(
        rate=-float(fit[0]),
        i_min=lo,
        i_max=hi,
        residual=residual,
        tail_ratio=float(c[-1]) / top if top > 0.0 else 0.0,
    )


def dyadic_windows(n: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """The default fit windows ``[N // 4, N // 2]`` and ``[N // 2, N]``."""
    mid = max(n // 2, 1)
    return (max(n // 4, 1), mid), (mid, n)


def decay_rates(
    coeffs: ArrayLike, windows: Sequence[tuple[int, int]] | None = None
) -> list[DecayReport | UndefinedRateError]:
    """
    Fit one decay rate per window, two dyadic windows by default.

    A window with too few nonzero entries yields its ``UndefinedRateError``
    in place of a report so the other windows still count.

    Raises:
        DomainError: If a window is empty or outside ``[1, N]``
    """
    c = np.asarray(coeffs, dtype=float)
    reports: list[DecayReport | UndefinedRateError] = []
    for lo, hi in windows if windows is not None else dyadic_windows(c.size - 1):
        try:
            reports.append(decay_rate(c, lo, hi))
        except UndefinedRateError as e:
            reports.append(e)
    return reports


# -- shift theorem ------------------------------------------------------------


def shift_factor(
    params: FractionalModelParams, i: ArrayLike, j: int
) -> float | NDArray[np.float64]:
    """``(i + 2j + alpha)(i + 1) / lambda_{i+j}^2``, the shift-theorem constant."""
    if j < 1:
        msg = f"Shift order must be at least 1 (got {j})"
        raise DomainError(msg)
    ii = np.asarray(i, dtype=int)
    lam = ladder_array(params, "lambda", int(ii.max(initial=0)) + j)[ii + j]
    value = (ii + 2.0 * j + params.alpha) * (ii + 1.0) / lam**2
    return float(value) if np.ndim(value) == 0 else value


def shift_factor_from_norms(
    params: FractionalModelParams, i: ArrayLike, j: int
) -> float | NDArray[np.float64]:
    """The same constant assembled from its norm ratio; agrees with ``shift_factor``."""
    if j < 1:
        msg = f"Shift order must be at least 1 (got {j})"
        raise DomainError(msg)
    ii = np.asarray(i, dtype=int)
    alpha, beta = params.alpha, params.beta
    lam = ladder_array(params, "lambda", int(ii.max(initial=0)) + j)[ii + j]
    upper = norm_sq_G(JacobiBasisId(alpha - beta + j, beta + j), ii)
    lower = norm_sq_G(JacobiBasisId(beta + j - 1.0, alpha - beta + j - 1.0), ii + 1)
    value = (ii + 2.0 * j + alpha) ** 2 / lam**2 * np.asarray(upper) / np.asarray(lower)
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class ShiftWindow:
    i_min: int
    i_max: int
    solution_tail: float
    rhs_tail: float
    bound: float

    @property
    def ratio(self) -> float:
        if self.rhs_tail == 0.0:
            return 0.0
        return self.solution_tail / self.rhs_tail

    @property
    def passed(self) -> bool:
        return self.solution_tail <= self.bound * self.rhs_tail * (1.0 + _RELATIVE_SLACK)


@dataclass(frozen=True)
class ShiftReport:
    j: int
    windows: tuple[ShiftWindow, ...]
    tail_ratio: float

    @property
    def inconclusive(self) -> bool:
        return self.tail_ratio > NON_DECAYED_TAIL

    @property
    def passed(self) -> bool:
        return all(w.passed for w in self.windows)


def _shift_window(
    params: FractionalModelParams,
    c: NDArray[np.float64],
    f: NDArray[np.float64],
    j: int,
    lo: int,
    hi: int,
) -> ShiftWindow:
    alpha, beta = params.alpha, params.beta
    i = np.arange(lo, hi + 1, dtype=float)
    grow = np.asarray(gamma_ratio([i + 2 * j + alpha + 1.0], [i + j + alpha + 1.0]))
    solution_tail = np.sum(
        c[lo + j : hi + j + 1] ** 2
        * grow**2
        * norm_sq_G(JacobiBasisId(alpha - beta + j, beta + j), i)
    )
    shrink = np.asarray(gamma_ratio([i + 2 * j + alpha], [i + j + alpha + 1.0]))
    rhs_norm = np.asarray(norm_sq_G(params.rhs_basis, i + j))
    rhs_tail = np.sum(
        f[lo + j : hi + j + 1] ** 2
        / rhs_norm**2
        * shrink**2
        * norm_sq_G(JacobiBasisId(beta + j - 1.0, alpha - beta + j - 1.0), i + 1)
    )
    bound = float(np.max(shift_factor(params, i.astype(int), j)))
    return ShiftWindow(lo, hi, float(solution_tail), float(rhs_tail), bound)


def shift_check(
    params: FractionalModelParams,
    rhs: RHSSpec,
    j: int = 1,
    n: int | None = None,
    windows: Sequence[tuple[int, int]] | None = None,
) -> ShiftReport:
    """
    Compare the weighted tail norm of ``D^j (u / rho)`` with that of ``D^{j-1} f``.

    Term by term the two tails differ by ``shift_factor(i, j)``, so on each
    window the solution tail is bounded by the window's largest shift factor
    times the right-hand side tail. Windows are inclusive ranges of ``i`` with
    ``i + j <= n``; the defaults are ``[n/4, n/2]`` and ``[n/2, n - j]``.
    """
    if j < 1:
        msg = f"Shift order must be at least 1 (got {j})"
        raise DomainError(msg)
    spectral = project_rhs(params, rhs, n)
    n = spectral.n
    c = solve_regular(params, spectral)
    if windows is None:
        windows = [(n // 4, n // 2), (n // 2, n - j)]

    checked = []
    for lo, hi in windows:
        if lo < 0 or hi + j > n:
            msg = f"Shift window [{lo}, {hi}] needs i + j <= {n}"
            raise DomainError(msg)
        if lo <= hi:
            checked.append(_shift_window(params, c, spectral.coeffs, j, lo, hi))

    magnitude = np.abs(c)
    top = float(magnitude.max(initial=0.0))
    report = ShiftReport(
        j=j,
        windows=tuple(checked),
        tail_ratio=float(magnitude[-1]) / top if top > 0.0 else 0.0,
    )
    if report.inconclusive:
        logger.warning(
            "Shift check inconclusive tail_ratio={ratio}", ratio=report.tail_ratio
        )
    return report


@dataclass(frozen=True)
class DerivativeNormReport:
    derivative_norm: float
    rhs_norm: float
    constant: float

    @property
    def passed(self) -> bool:
        return self.derivative_norm <= self.constant * self.rhs_norm * (
            1.0 + _RELATIVE_SLACK
        )


def derivative_norm_check(
    params: FractionalModelParams, coeffs: ArrayLike, f_coeffs: ArrayLike
) -> DerivativeNormReport:
    """
    Bound the weighted norm of ``Du`` by the weighted norm of ``f``.

    ``sum (i+1)^2 c_i^2 ||G_{i+1}^{(alpha-beta-1, beta-1)}||^2`` is at most
    ``2 max (i+1)^2 / lambda_i^2`` times ``sum f_i^2 / ||G_i^{(beta, alpha-beta)}||^2``.
    """
    c = np.asarray(coeffs, dtype=float)
    f = np.asarray(f_coeffs, dtype=float)
    if c.shape != f.shape:
        msg = "Solution and right-hand side coefficients must have the same length"
        raise DomainError(msg)
    i = np.arange(c.size, dtype=float)
    lam = ladder_array(params, "lambda", c.size - 1)
    derivative = np.sum((i + 1.0) ** 2 * c**2 * norm_sq_G(params.kernel_basis, i + 1))
    rhs = np.sum(f**2 / norm_sq_G(params.rhs_basis, i))
    constant = 2.0 * float(np.max((i + 1.0) ** 2 / lam**2, initial=0.0))
    return DerivativeNormReport(float(derivative), float(rhs), constant)


# -- residuals ----------------------------------------------------------------


def residual_certificate(
    params: FractionalModelParams,
    model: Model,
    sol: SpectralSolution,
    f: Callable[[NDArray[np.float64]], ArrayLike],
    points: Sequence[float] = DEFAULT_POINTS,
    *,
    mode: OperatorMode = "verification",
) -> float:
    """``max |L u - f|`` over interior ``points``."""
    xs = np.asarray(points, dtype=float)
    want = np.broadcast_to(np.asarray(f(xs), dtype=float), xs.shape)
    got = np.array([apply_operator(params, model, sol, float(x), mode=mode) for x in xs])
    return float(np.max(np.abs(got - want), initial=0.0))


# -- flux-constant series -----------------------------------------------------


@dataclass(frozen=True)
class BlockBound:
    """One dyadic block of the flux-constant series and its Cauchy-Schwarz bound."""

    i_min: int
    i_max: int
    block_sum: float
    bound: float

    @property
    def passed(self) -> bool:
        return abs(self.block_sum) <= self.bound * (1.0 + _RELATIVE_SLACK) + 1e-300


def flux_series_bound_check(
    params: FractionalModelParams, f_coeffs: ArrayLike, *, at_one: bool = False
) -> list[BlockBound]:
    """
    Bound each dyadic block ``[2^k, 2^{k+1})`` of the flux-constant series.

    Each term factors as ``(f_i / ||G_i||) e_i`` with
    ``e_i = mu_i G_{i+1}(e) / (lambda_i ||G_i||)``, so the block sum is at most
    the block's weighted norm of ``f`` times the norm of ``e``.
    """
    f = np.asarray(f_coeffs, dtype=float)
    n = f.size - 1
    spectral = SpectralRHS(params=params, n=n, coeffs=f)
    terms = flux_series_terms(params, solve_regular(params, spectral), at_one)
    i = np.arange(n + 1)
    norms = np.sqrt(np.asarray(norm_sq_G(params.rhs_basis, i)))
    lam = ladder_array(params, "lambda", n)
    mu = ladder_array(params, "mu", n)
    endpoint = G_at_one if at_one else G_at_zero
    weights = mu * np.asarray(endpoint(params.flux_basis, i + 1)) / (lam * norms)

    blocks = [BlockBound(0, 0, float(terms[0]), abs(f[0] / norms[0] * weights[0]))]
    lo = 1
    while lo <= n:
        hi = min(2 * lo - 1, n)
        sl = slice(lo, hi + 1)
        bound = float(np.linalg.norm(f[sl] / norms[sl]) * np.linalg.norm(weights[sl]))
        blocks.append(BlockBound(lo, hi, float(terms[sl].sum()), bound))
        lo *= 2
    return blocks


@dataclass(frozen=True)
class ProbeReport:
    """Growth of the flux-constant series against a finite weighted norm of ``f``."""

    variant: ProbeVariant
    alpha: float
    beta: float
    ns: tuple[int, ...]
    flux_partial_sums: tuple[float, ...]
    norm_partial_sums: tuple[float, ...]
    loglog_intercept: float
    loglog_slope: float
    flux_block_slope: float
    norm_block_slope: float
    norm_limit: float

    @property
    def norm_converges(self) -> bool:
        return self.norm_block_slope < SUMMABLE_SLOPE

    @property
    def flux_diverges(self) -> bool:
        return self.flux_block_slope >= SUMMABLE_SLOPE and self.loglog_slope > 0.0

    @property
    def monotone_growth(self) -> bool:
        return bool(np.all(np.diff(np.abs(self.flux_partial_sums)) > 0.0))


def ill_posedness_probe(
    alpha: float,
    variant: ProbeVariant = "flux_at_zero",
    exponents: Sequence[int] = tuple(range(4, 21)),
) -> ProbeReport:
    """
    Show that a one-sided problem with flux data is not well posed.

    ``flux_at_zero`` takes ``r = 1`` (so ``beta = alpha - 1``) and the log-series
    right-hand side; ``flux_at_one`` is the mirror image at ``r = 0``. Partial
    sums are taken at ``N = 2^k``. Over dyadic blocks the weighted norm of
    ``f`` grows by about ``1/k^2`` (summable) while the flux-constant series
    grows by about ``1/k``, so its partial sums follow ``a + b log log N``.
    """
    exps = sorted(set(exponents))
    if len(exps) < 3 or exps[0] < 2:
        msg = "The probe needs at least three dyadic sizes 2^k with k >= 2"
        raise DomainError(msg)
    at_one = variant == "flux_at_one"
    params = FractionalModelParams.from_alpha_r(alpha, 0.0 if at_one else 1.0)
    n_max = 2 ** exps[-1]

    f = log_series_coefficients(n_max, mirrored=at_one)
    spectral = SpectralRHS(params=params, n=n_max, coeffs=f)
    terms = flux_series_terms(params, solve_regular(params, spectral), at_one)
    norm_terms = f**2 / norm_sq_G(params.rhs_basis, np.arange(n_max + 1))

    ns = np.array([2**k for k in exps])
    s = np.cumsum(terms)[ns]
    p = np.cumsum(norm_terms)[ns]

    slope, intercept = np.polyfit(np.log(np.log(ns)), np.abs(s), 1)
    k = np.asarray(exps[:-1], dtype=float)
    flux_blocks = np.abs(np.diff(s))
    norm_blocks = np.abs(np.diff(p))
    flux_block_slope = _log_slope(k, flux_blocks)
    norm_block_slope = _log_slope(k, norm_blocks)
    _, norm_limit = np.polyfit(1.0 / np.log(ns), p, 1)

    report = ProbeReport(
        variant=variant,
        alpha=alpha,
        beta=params.beta,
        ns=tuple(int(v) for v in ns),
        flux_partial_sums=tuple(float(v) for v in s),
        norm_partial_sums=tuple(float(v) for v in p),
        loglog_intercept=float(intercept),
        loglog_slope=float(slope),
        flux_block_slope=flux_block_slope,
        norm_block_slope=norm_block_slope,
        norm_limit=float(norm_limit),
    )
    logger.info(
        "Ill-posedness probe variant={variant} loglog_slope={slope} "
        "flux_block_slope={fb} norm_block_slope={nb}",
        variant=variant,
        slope=report.loglog_slope,
        fb=flux_block_slope,
        nb=norm_block_slope,
    )
    return report


def _log_slope(k: NDArray[np.float64], values: NDArray[np.float64]) -> float:
    keep = values > 0.0
    if keep.sum() < 2:
        return float("-inf")
    return float(np.polyfit(np.log(k[keep]), np.log(values[keep]), 1)[0])


# -- eigenrelation suite ------------------------------------------------------


@dataclass(frozen=True)
class IdentityCheck:
    identity: str
    alpha: float
    r: float
    n: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def _max_error(got: NDArray[np.float64], want: NDArray[np.float64]) -> float:
    return float(np.max(np.abs(got - want), initial=0.0))


def _oracle(
    fn: Callable[[float], float], points: Sequence[float]
) -> NDArray[np.float64]:
    return np.array([fn(float(x)) for x in points])


def _identity_rows(
    params: FractionalModelParams,
    reference: FractionalModelParams,
    n: int,
    points: Sequence[float],
) -> list[IdentityCheck]:
    alpha, r = params.alpha, params.r
    xs = np.asarray(points, dtype=float)
    kernel = WeightedPolyFunction.basis_element(params.kernel_basis, n)
    solution = WeightedPolyFunction.basis_element(params.solution_basis, n)
    rows = []

    got = _oracle(lambda x: apply_I_r(params, kernel, x), points)
    want = reference.ladder("sigma", n) * np.asarray(eval_G(params.flux_basis, n, xs))
    rows.append(IdentityCheck("sigma", alpha, r, n, _max_error(got, want), QUADRATURE_TOL))

    cases = (
        ("mu", apply_flux, "rl", solution),
        ("lambda", apply_operator, "rlc", solution),
        ("kappa", apply_operator, "rl", kernel),
    )
    for name, op, model, u in cases:
        got = _oracle(lambda x: op(params, model, u, x, mode="verification"), points)
        want = _oracle(lambda x: op(reference, model, u, x, mode="closed_form"), points)
        rows.append(
            IdentityCheck(name, alpha, r, n, _max_error(got, want), FINITE_DIFFERENCE_TOL)
        )

    if n == 0:
        spread = float(np.ptp(_oracle(lambda x: apply_I_r(params, kernel, x), points)))
        rows.append(IdentityCheck("kernel", alpha, r, n, spread, QUADRATURE_TOL))

    if n <= MONOMIAL_MAX_DEGREE:
        a, b = lemma_coefficients(reference, n)
        monomial = np.zeros(n + 1)
        monomial[n] = 1.0
        mirrored = params.mirrored()
        sides = (
            ("monomial", params, a),
            ("monomial_mirror", mirrored, b),
        )
        for name, side_params, coeffs in sides:
            basis = side_params.kernel_basis
            g = WeightedPolyFunction.power(basis.a, basis.b, monomial)
            got = _oracle(lambda x: apply_I_r(side_params, g, x), MONOMIAL_POINTS)
            want = np.polynomial.polynomial.polyval(np.asarray(MONOMIAL_POINTS), coeffs)
            rows.append(
                IdentityCheck(name, alpha, r, n, _max_error(got, want), QUADRATURE_TOL)
            )
    return rows


def eigenrelation_suite(
    alpha_grid: Sequence[float],
    r_grid: Sequence[float],
    n_max: int,
    points: Sequence[float] = DEFAULT_POINTS,
    fault: float = 0.0,
) -> list[IdentityCheck]:
    """
    Check every eigenrelation against the quadrature oracle.

    Quadrature sides always use the exact Condition A parameters; closed-form
    sides use ``c**`` shifted by ``fault`` so a nonzero fault must fail.
    Errors are absolute: ``max |oracle - closed form|`` over the points.
    """
    if n_max < 0:
        msg = f"n_max must be nonnegative (got {n_max})"
        raise DomainError(msg)
    rows: list[IdentityCheck] = []
    for alpha in alpha_grid:
        for r in r_grid:
            params = FractionalModelParams.from_alpha_r(alpha, r)
            reference = params.perturbed(fault) if fault else params
            for n in range(n_max + 1):
                rows.extend(_identity_rows(params, reference, n, points))
            logger.debug("Checked identities alpha={alpha} r={r}", alpha=alpha, r=r)
    failed = sum(not row.passed for row in rows)
    logger.info(
        "Eigenrelation suite rows={rows} failed={failed}", rows=len(rows), failed=failed
    )
    return rows
