"""Tests for the spectral solver."""

import math

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy.integrate import quad
from scipy.special import beta as beta_fn

from fracspec.config import settings
from fracspec.exceptions import (
    CompatibilityError,
    DomainError,
    IllPosedError,
    IndexConventionError,
    SeriesDivergenceError,
)
from fracspec.frac_operators import apply_operator, first_derivative
from fracspec.jacobi_core import eval_G, norm_sq_G
from fracspec.model_params import FractionalModelParams, ladder_array
from fracspec.spectral_solver import (
    BoundaryConditionSpec,
    RHSSpec,
    SingularTerm,
    SpectralRHS,
    classify,
    evaluate,
    evaluate_flux,
    flux_constant_series,
    flux_series_sum,
    kernel_k,
    log_series_coefficients,
    project_rhs,
    rhs_integral,
    solution_integral,
    solve,
    solve_regular,
    solve_rl_weak,
)


def manufactured_rhs(params, n):
    """f = lambda_n G_n^{(beta, alpha-beta)}, whose regular solution is rho G_n."""
    d = np.zeros(n + 1)
    d[n] = params.ladder("lambda", n)
    return RHSSpec.jacobi(d)


def eval_G_at_zero(params, size):
    return np.array([eval_G(params.flux_basis, j, 0.0) for j in range(1, size + 1)])


class TestRHSSpec:
    """Test right-hand side descriptions."""

    def test_evaluate_named_kinds(self, symmetric_params):
        """✅ Test constant, monomial and polynomial evaluation."""
        x = np.array([0.25, 0.5])

        assert_allclose(RHSSpec.constant(2.0).evaluate(symmetric_params, x), [2.0, 2.0])
        assert_allclose(RHSSpec.monomial(2.0).evaluate(symmetric_params, x), x**2)
        assert_allclose(
            RHSSpec.polynomial([1.0, 0.0, 3.0]).evaluate(symmetric_params, x), 1 + 3 * x**2
        )

    def test_evaluate_callable(self, symmetric_params):
        """✅ Test a vectorised callable is used as given."""
        rhs = RHSSpec.from_callable(np.exp)

        assert_allclose(rhs.evaluate(symmetric_params, [0.0, 1.0]), [1.0, math.e])

    def test_evaluate_jacobi(self, symmetric_params):
        """✅ Test Jacobi coefficients are expansion coefficients."""
        rhs = RHSSpec.jacobi([0.0, 2.0])
        x = np.array([0.3, 0.6])

        assert_allclose(
            rhs.evaluate(symmetric_params, x),
            2.0 * np.asarray(eval_G(symmetric_params.rhs_basis, 1, x)),
        )

    def test_rejects_negative_monomial(self):
        """❌ Test a monomial power must be nonnegative."""
        with pytest.raises(DomainError, match="nonnegative"):
            RHSSpec.monomial(-0.5)

    def test_rejects_callable_without_function(self):
        """❌ Test the callable kind needs a function."""
        with pytest.raises(DomainError, match="needs a function"):
            RHSSpec("callable")

    def test_rejects_non_finite(self):
        """❌ Test parameters must be finite."""
        with pytest.raises(DomainError, match="finite"):
            RHSSpec.polynomial([1.0, float("inf")])


class TestLogSeriesCoefficients:
    """Test the log-series projections."""

    def test_values(self):
        """✅ Test f_i = (-1)^i / (i log i) from i = 2."""
        f = log_series_coefficients(4)

        assert_allclose(
            f, [0.0, 0.0, 1 / (2 * math.log(2)), -1 / (3 * math.log(3)), 1 / (4 * math.log(4))]
        )

    def test_mirrored_drops_the_sign(self):
        """✅ Test the mirrored sequence is positive."""
        f = log_series_coefficients(10, mirrored=True)

        assert np.all(f[2:] > 0.0)
        assert_allclose(np.abs(log_series_coefficients(10)), f)

    def test_short_sequences(self):
        """✅ Test sizes below 2 are all zero."""
        assert_allclose(log_series_coefficients(1), [0.0, 0.0])


class TestProjection:
    """Test projecting f onto the data family."""

    def test_constant_has_single_mode(self, symmetric_params):
        """✅ Test f = 1 projects onto G_0 only."""
        spectral = project_rhs(symmetric_params, RHSSpec.constant(1.0), 8)

        assert spectral.coeffs[0] == pytest.approx(beta_fn(1.75, 1.75), rel=1e-13)
        assert_allclose(spectral.coeffs[1:], 0.0, atol=1e-14)

    def test_jacobi_is_exact(self, skewed_params):
        """✅ Test Jacobi data convert through the norms without quadrature."""
        spectral = project_rhs(skewed_params, RHSSpec.jacobi([0.0, 0.0, 0.0, 2.0]), 5)

        assert spectral.coeffs[3] == pytest.approx(2.0 * norm_sq_G(skewed_params.rhs_basis, 3))
        assert_allclose(spectral.expansion, [0.0, 0.0, 0.0, 2.0, 0.0, 0.0], atol=1e-15)

    def test_jacobi_is_truncated(self, skewed_params):
        """✅ Test coefficients beyond n are dropped."""
        spectral = project_rhs(skewed_params, RHSSpec.jacobi(np.ones(10)), 3)

        assert spectral.coeffs.shape == (4,)

    def test_quadrature_matches_jacobi(self, skewed_params):
        """✅ Test a polynomial given by values projects like its Jacobi form."""
        x_poly = RHSSpec.from_callable(lambda x: eval_G(skewed_params.rhs_basis, 2, x))
        by_values = project_rhs(skewed_params, x_poly, 6)
        by_coeffs = project_rhs(skewed_params, RHSSpec.jacobi([0.0, 0.0, 1.0]), 6)

        assert_allclose(by_values.coeffs, by_coeffs.coeffs, atol=1e-14)

    def test_log_series_is_exact(self, symmetric_params):
        """✅ Test the log series hands over its projections directly."""
        spectral = project_rhs(symmetric_params, RHSSpec.log_series(), 16)

        assert_allclose(spectral.coeffs, log_series_coefficients(16))

    def test_rejects_negative_truncation(self, symmetric_params):
        """❌ Test n must be nonnegative."""
        with pytest.raises(DomainError, match="nonnegative"):
            project_rhs(symmetric_params, RHSSpec.constant(1.0), -1)

    def test_spectral_rhs_checks_shape(self, symmetric_params):
        """❌ Test projections must have n + 1 entries."""
        with pytest.raises(DomainError, match="Expected 4"):
            SpectralRHS(params=symmetric_params, n=3, coeffs=np.zeros(3))

    def test_uses_default_truncation(self, symmetric_params):
        """✅ Test n defaults to settings.default_truncation."""
        spectral = project_rhs(symmetric_params, RHSSpec.constant(1.0))

        assert spectral.n == settings.default_truncation


class TestSolveRegular:
    """Test the diagonal solve."""

    def test_constant_rhs(self, symmetric_params):
        """✅ Test f = 1 gives c_0 = 1 / lambda_0."""
        c = solve_regular(symmetric_params, project_rhs(symmetric_params, RHSSpec.constant(1.0), 8))

        assert c[0] == pytest.approx(1.0 / symmetric_params.ladder("lambda", 0), rel=1e-13)
        assert c[0] == pytest.approx(1.0638, abs=1e-4)

    @pytest.mark.parametrize("mode", [0, 3, 7])
    def test_manufactured_mode(self, skewed_params, mode):
        """✅ Test f = lambda_n G_n recovers c_n = 1."""
        spectral = project_rhs(skewed_params, manufactured_rhs(skewed_params, mode), 10)
        c = solve_regular(skewed_params, spectral)
        want = np.zeros(11)
        want[mode] = 1.0

        assert_allclose(c, want, atol=1e-12)

    def test_polynomial_band(self, symmetric_params):
        """✅ Test f = x(1-x) leaves nothing beyond degree 2."""
        spectral = project_rhs(symmetric_params, RHSSpec.polynomial([0.0, 1.0, -1.0]), 16)
        c = solve_regular(symmetric_params, spectral)

        assert np.max(np.abs(c[3:])) <= 1e-12


class TestKernelFunctions:
    """Test the RLC kernel functions."""

    def test_sum_is_complete_beta(self, skewed_params):
        """✅ Test k0 + k1 = B(beta, alpha - beta)."""
        x = np.linspace(0.0, 1.0, 9)
        complete = beta_fn(skewed_params.beta, skewed_params.alpha - skewed_params.beta)

        assert_allclose(
            kernel_k(skewed_params, "k0", x) + kernel_k(skewed_params, "k1", x),
            complete,
            rtol=1e-13,
        )

    def test_endpoint_values(self, skewed_params):
        """✅ Test k1(0) = k0(1) = 0."""
        assert kernel_k(skewed_params, "k1", 0.0) == 0.0
        assert kernel_k(skewed_params, "k0", 1.0) == 0.0

    def test_derivative_is_kernel_weight(self, skewed_params):
        """✅ Test D k1 = (1-x)^{alpha-beta-1} x^{beta-1}."""
        kernel = skewed_params.kernel_basis
        for x in (0.3, 0.7):
            slope = first_derivative(lambda s: kernel_k(skewed_params, "k1", s), x)
            assert slope == pytest.approx((1 - x) ** kernel.a * x**kernel.b, rel=1e-8)

    def test_rejects_points_outside(self, skewed_params):
        """❌ Test kernel functions live on [0, 1]."""
        with pytest.raises(DomainError, match="defined on"):
            kernel_k(skewed_params, "k0", 1.5)


class TestClassify:
    """Test the well-posedness table."""

    @pytest.mark.parametrize(
        "model,family,r,left,right,status",
        [
            ("rlc", "dirichlet", 0.0, 1.0, 2.0, "WellPosed"),
            ("rlc", "dirichlet", 0.5, 1.0, 2.0, "WellPosed"),
            ("rlc", "dirichlet", 1.0, 1.0, 2.0, "WellPosed"),
            ("rlc", "mixed_flux_dirichlet", 0.0, 1.0, 2.0, "WellPosed"),
            ("rlc", "mixed_flux_dirichlet", 0.5, 1.0, 2.0, "WellPosed"),
            ("rlc", "mixed_flux_dirichlet", 1.0, 1.0, 2.0, "IllPosed"),
            ("rlc", "neumann", 0.0, 0.0, 1.0, "IllPosed"),
            ("rlc", "neumann", 0.5, 0.0, 1.0, "WellPosedUpToConstant"),
            ("rlc", "neumann", 1.0, 0.0, 1.0, "IllPosed"),
            ("rl", "dirichlet", 0.5, 0.0, 0.0, "WellPosed"),
            ("rl", "dirichlet", 0.5, 1.0, 0.0, "RequiresSingularBC"),
            ("rl", "mixed_flux_dirichlet", 0.5, 1.0, 0.0, "WellPosed"),
            ("rl", "mixed_flux_dirichlet", 0.5, 1.0, 2.0, "RequiresSingularBC"),
            ("rl", "rl_mixed", 0.0, 1.0, 2.0, "WellPosed"),
            ("rl", "rl_mixed", 1.0, 1.0, 2.0, "IllPosed"),
            ("rl", "neumann", 0.0, 0.0, 1.0, "IllPosed"),
            ("rl", "neumann", 0.5, 0.0, 1.0, "WellPosedUpToConstant"),
            ("rl", "rl_weighted_dirichlet", 1.0, 1.0, 2.0, "WellPosed"),
        ],
    )
    def test_status(self, model, family, r, left, right, status):
        """✅ Test the status for each (model, boundary family, r)."""
        params = FractionalModelParams.from_alpha_r(1.5, r)
        bc = BoundaryConditionSpec(family=family, left=left, right=right)

        report = classify(params, model, bc)

        assert report.status == status
        assert report.rule

    def test_ill_posed_rule_says_so(self):
        """✅ Test the one-sided mixed rule states it is not well posed."""
        params = FractionalModelParams.from_alpha_r(1.5, 1.0)
        bc = BoundaryConditionSpec(family="mixed_flux_dirichlet")

        assert "not well posed" in classify(params, "rlc", bc).rule

    def test_rl_family_with_rlc_model(self, symmetric_params):
        """❌ Test RL-only families are refused for the RLC model."""
        bc = BoundaryConditionSpec(family="rl_mixed")

        with pytest.raises(DomainError, match="RL model only"):
            classify(symmetric_params, "rlc", bc)

    def test_boundary_values_must_be_finite(self):
        """❌ Test non-finite boundary data are rejected."""
        with pytest.raises(ValidationError, match="finite"):
            BoundaryConditionSpec(family="dirichlet", left=float("nan"))


class TestSolveRLC:
    """Test RLC solves."""

    def test_manufactured_dirichlet(self, skewed_params):
        """✅ Test the single-mode problem recovers c_3 = 1 and zero boundary values."""
        bc = BoundaryConditionSpec(family="dirichlet")
        sol, report = solve(skewed_params, "rlc", bc, manufactured_rhs(skewed_params, 3), 8)
        want = np.zeros(9)
        want[3] = 1.0

        assert report.status == "WellPosed"
        assert_allclose(sol.regular_coeffs, want, atol=1e-12)
        assert sol.kernel_amplitudes == (0.0, 0.0)
        assert_allclose(sol.evaluate([0.0, 1.0]), [0.0, 0.0], atol=1e-10)

    def test_dirichlet_data(self, skewed_params):
        """✅ Test nonzero Dirichlet data are met through the kernel functions."""
        bc = BoundaryConditionSpec(family="dirichlet", left=1.0, right=2.0)
        sol, _ = solve(skewed_params, "rlc", bc, RHSSpec.constant(1.0), 8)

        assert sol(0.0) == pytest.approx(1.0, abs=1e-10)
        assert sol(1.0) == pytest.approx(2.0, abs=1e-10)

    def test_pure_kernel_solution(self, symmetric_params):
        """✅ Test f = 0 with data A gives u = A k0 / B(beta, alpha-beta)."""
        bc = BoundaryConditionSpec(family="dirichlet", left=1.0, right=0.0)
        sol, _ = solve(symmetric_params, "rlc", bc, RHSSpec.constant(0.0), 4)
        x = np.array([0.2, 0.5, 0.8])
        complete = beta_fn(0.75, 0.75)

        assert_allclose(evaluate(sol, x), kernel_k(symmetric_params, "k0", x) / complete)
        assert_allclose(sol.closed_form_operator("rlc", x), 0.0)

    def test_flux_closed_form_matches_quadrature(self, skewed_params):
        """✅ Test the closed-form flux against the quadrature oracle."""
        bc = BoundaryConditionSpec(family="dirichlet", left=0.5, right=-0.5)
        sol, _ = solve(skewed_params, "rlc", bc, RHSSpec.polynomial([1.0, 2.0]), 6)

        for x in (0.3, 0.6):
            closed = evaluate_flux(sol, x)
            verified = evaluate_flux(sol, x, mode="verification")
            assert verified == pytest.approx(closed, rel=1e-8, abs=1e-8)

    def test_operator_reproduces_polynomial_rhs(self, symmetric_params):
        """✅ Test L u_N = f for f of degree at most N."""
        bc = BoundaryConditionSpec(family="dirichlet")
        sol, _ = solve(symmetric_params, "rlc", bc, RHSSpec.polynomial([0.0, 1.0, -1.0]), 8)
        x = np.linspace(0.0, 1.0, 7)

        assert_allclose(sol.closed_form_operator("rlc", x), x * (1 - x), atol=1e-12)

    def test_mixed_meets_flux_and_value(self, skewed_params):
        """✅ Test flux data at 0 and a value at 1."""
        bc = BoundaryConditionSpec(family="mixed_flux_dirichlet", left=0.5, right=0.25)
        sol, report = solve(skewed_params, "rlc", bc, RHSSpec.polynomial([1.0, -1.0, 2.0]), 12)

        assert report.status == "WellPosed"
        assert evaluate_flux(sol, 0.0) == pytest.approx(0.5, abs=1e-10)
        assert sol(1.0) == pytest.approx(0.25, abs=1e-10)

    def test_mixed_one_sided_left_is_ill_posed(self):
        """❌ Test flux data at 0 with r = 1 are rejected."""
        params = FractionalModelParams.from_alpha_r(1.5, 1.0)
        bc = BoundaryConditionSpec(family="mixed_flux_dirichlet", left=0.5)

        with pytest.raises(IllPosedError) as excinfo:
            solve(params, "rlc", bc, RHSSpec.constant(1.0), 8)

        assert excinfo.value.report.status == "IllPosed"

    def test_mixed_with_r_zero(self):
        """✅ Test flux data at 0 are fine with r = 0."""
        params = FractionalModelParams.from_alpha_r(1.5, 0.0)
        bc = BoundaryConditionSpec(family="mixed_flux_dirichlet", left=-0.3, right=0.0)
        sol, _ = solve(params, "rlc", bc, RHSSpec.constant(1.0), 8)

        assert evaluate_flux(sol, 0.0) == pytest.approx(-0.3, abs=1e-10)

    def test_neumann(self, skewed_params):
        """✅ Test Neumann data give both fluxes and a free constant."""
        bc = BoundaryConditionSpec(family="neumann", left=0.2, right=1.2)
        sol, report = solve(skewed_params, "rlc", bc, RHSSpec.constant(1.0), 8)

        assert report.status == "WellPosedUpToConstant"
        assert report.compatibility_residual == pytest.approx(0.0, abs=1e-12)
        assert sol.gauge_free
        assert evaluate_flux(sol, 0.0) == pytest.approx(0.2, abs=1e-10)
        assert evaluate_flux(sol, 1.0) == pytest.approx(1.2, abs=1e-10)

    def test_neumann_mean_zero(self, skewed_params):
        """✅ Test the mean-zero gauge."""
        bc = BoundaryConditionSpec(family="neumann", left=0.2, right=1.2)
        sol, _ = solve(skewed_params, "rlc", bc, RHSSpec.constant(1.0), 8, pin="mean_zero")
        integral, _ = quad(lambda x: sol(x), 0.0, 1.0, epsabs=1e-12)

        assert solution_integral(sol) == pytest.approx(0.0, abs=1e-12)
        assert integral == pytest.approx(0.0, abs=1e-8)

    def test_neumann_incompatible(self, skewed_params):
        """❌ Test B - A must equal the integral of f."""
        bc = BoundaryConditionSpec(family="neumann", left=0.0, right=0.9)

        with pytest.raises(CompatibilityError) as excinfo:
            solve(skewed_params, "rlc", bc, RHSSpec.constant(1.0), 8)

        assert excinfo.value.residual == pytest.approx(0.1)
        assert excinfo.value.report.compatibility_residual == pytest.approx(0.1)

        assert evaluate_flux(sol, 1.0) - evaluate_flux(sol, 0.0) == pytest.approx(
            integral, abs=1e-8
        )

        perturbed = BoundaryConditionSpec(
            family="neumann", left=left, right=left + integral + 1e-3
        )
        with pytest.raises(CompatibilityError):
            solve(skewed_params, "rlc", perturbed, RHSSpec.polynomial(coeffs), 12)

    def test_solution_integral_matches_quadrature(self, skewed_params):
        """✅ Test the closed-form integral of a Dirichlet solution."""
        bc = BoundaryConditionSpec(family="dirichlet", left=0.5, right=1.0)
        sol, _ = solve(skewed_params, "rlc", bc, RHSSpec.constant(1.0), 8)
        integral, _ = quad(lambda x: sol(x), 0.0, 1.0, epsabs=1e-12)

        assert solution_integral(sol) == pytest.approx(integral, abs=1e-8)

    def test_analytic_rhs_tail(self, symmetric_params):
        """✅ Test an analytic f is resolved well below the truncation."""
        bc = BoundaryConditionSpec(family="dirichlet")
        sol, _ = solve(symmetric_params, "rlc", bc, RHSSpec.from_callable(np.exp), 32)

        assert sol.tail_ratio <= 1e-8

    def test_rlc_closed_form_refuses_singular_terms(self, symmetric_params):
        """❌ Test RLC closed forms do not cover RL singular terms."""
        bc = BoundaryConditionSpec(family="rl_weighted_dirichlet", left=1.0, right=1.0)
        sol, _ = solve(symmetric_params, "rl", bc, RHSSpec.constant(0.0), 4)

        with pytest.raises(DomainError, match="singular endpoint terms"):
            sol.closed_form_flux("rlc", 0.5)


class TestSolveRL:
    """Test RL solves."""

    def test_homogeneous_dirichlet(self, skewed_params):
        """✅ Test homogeneous RL Dirichlet coincides with RLC."""
        bc = BoundaryConditionSpec(family="dirichlet")
        rhs = manufactured_rhs(skewed_params, 2)
        rl, _ = solve(skewed_params, "rl", bc, rhs, 6)
        rlc, _ = solve(skewed_params, "rlc", bc, rhs, 6)

        assert_allclose(rl.regular_coeffs, rlc.regular_coeffs)
        assert rl.singular_terms == ()

    def test_nonzero_dirichlet_needs_weighted_limits(self, skewed_params):
        """❌ Test plain nonzero RL Dirichlet data are refused."""
        bc = BoundaryConditionSpec(family="dirichlet", left=1.0)

        with pytest.raises(IllPosedError) as excinfo:
            solve(skewed_params, "rl", bc, RHSSpec.constant(1.0), 6)

        assert excinfo.value.report.status == "RequiresSingularBC"

    def test_weighted_dirichlet(self, symmetric_params):
        """✅ Test weighted endpoint limits recover the data."""
        bc = BoundaryConditionSpec(family="rl_weighted_dirichlet", left=1.0, right=2.0)
        sol, _ = solve(symmetric_params, "rl", bc, RHSSpec.constant(0.0), 4)
        beta, alpha = symmetric_params.beta, symmetric_params.alpha

        x0 = 1e-10
        x1 = 1.0 - 1e-10
        assert x0 ** (1 - beta) * sol(x0) == pytest.approx(1.0, abs=1e-8)
        assert (1 - x1) ** (1 + beta - alpha) * sol(x1) == pytest.approx(2.0, abs=1e-6)

    def test_singular_endpoints_are_infinite(self, symmetric_params):
        """✅ Test blowing-up endpoints evaluate to signed infinities."""
        bc = BoundaryConditionSpec(family="rl_weighted_dirichlet", left=1.0, right=-2.0)
        sol, _ = solve(symmetric_params, "rl", bc, RHSSpec.constant(0.0), 4)

        values = sol.evaluate(np.array([0.0, 1.0]))

        assert values[0] == math.inf
        assert values[1] == -math.inf

    def test_rl_mixed(self, symmetric_params):
        """✅ Test flux data at 0 and a weighted limit at 1 with f = 0."""
        bc = BoundaryConditionSpec(family="rl_mixed", left=0.3, right=0.7)
        sol, report = solve(symmetric_params, "rl", bc, RHSSpec.constant(0.0), 4)
        beta, alpha = symmetric_params.beta, symmetric_params.alpha
        c1 = -0.3 / symmetric_params.mu_minus_one

        assert report.status == "WellPosed"
        assert sol.singular_terms[0] == SingularTerm(c1, alpha - beta - 1.0, beta)
        assert evaluate_flux(sol, 0.0) == pytest.approx(0.3, abs=1e-12)
        for x in (0.3, 0.6):
            assert evaluate_flux(sol, x, mode="verification") == pytest.approx(0.3, rel=1e-6)
        x1 = 1.0 - 1e-10
        assert (1 - x1) ** (1 + beta - alpha) * sol(x1) == pytest.approx(0.7, abs=1e-6)

    def test_mixed_flux_dirichlet_reduces_to_rl_mixed(self, symmetric_params):
        """✅ Test the plain mixed family with B = 0 matches rl_mixed."""
        rhs = RHSSpec.polynomial([1.0, 1.0])
        plain, _ = solve(
            symmetric_params,
            "rl",
            BoundaryConditionSpec(family="mixed_flux_dirichlet", left=0.4),
            rhs,
            8,
        )
        weighted, _ = solve(
            symmetric_params, "rl", BoundaryConditionSpec(family="rl_mixed", left=0.4), rhs, 8
        )

        assert plain.singular_terms == weighted.singular_terms

    def test_rl_neumann(self, skewed_params):
        """✅ Test RL Neumann fluxes and the mean-zero free direction."""
        bc = BoundaryConditionSpec(family="neumann", left=0.2, right=1.2)
        sol, report = solve(skewed_params, "rl", bc, RHSSpec.constant(1.0), 8, pin="mean_zero")

        assert report.status == "WellPosedUpToConstant"
        assert evaluate_flux(sol, 0.0) == pytest.approx(0.2, abs=1e-10)
        assert evaluate_flux(sol, 1.0) == pytest.approx(1.2, abs=1e-10)
        assert solution_integral(sol) == pytest.approx(0.0, abs=1e-12)
        assert len(sol.singular_terms) == 2

    def test_rl_closed_form_refuses_kernel_functions(self, symmetric_params):
        """❌ Test RL closed forms do not cover RLC kernel functions."""
        bc = BoundaryConditionSpec(family="dirichlet", left=1.0)
        sol, _ = solve(symmetric_params, "rlc", bc, RHSSpec.constant(0.0), 4)

        with pytest.raises(DomainError, match="kernel functions"):
            sol.closed_form_operator("rl", 0.5)


class TestSuperposition:
    """Test solutions are linear in the right-hand side and the boundary data."""

    @pytest.mark.parametrize(
        ("model", "family"),
        [("rlc", "dirichlet"), ("rlc", "mixed_flux_dirichlet"), ("rl", "rl_weighted_dirichlet")],
    )
    def test_linear_in_data(self, skewed_params, model, family):
        """✅ Test u[2 f1 + f2, 2 g1 + g2] = 2 u[f1, g1] + u[f2, g2]."""
        f1, f2 = np.exp, lambda x: np.cos(3.0 * x)
        g1, g2 = (0.3, -0.2), (0.5, 0.7)

        def solve_with(f, g):
            bc = BoundaryConditionSpec(family=family, left=g[0], right=g[1])
            sol, _ = solve(skewed_params, model, bc, RHSSpec.from_callable(f), 48)
            return sol

        combined = solve_with(
            lambda x: 2.0 * f1(x) + f2(x), tuple(2.0 * a + b for a, b in zip(g1, g2))
        )
        x = np.linspace(0.1, 0.9, 9)

        assert_allclose(
            combined(x),
            2.0 * solve_with(f1, g1)(x) + solve_with(f2, g2)(x),
            rtol=1e-10,
            atol=1e-10,
        )


class TestNeumann:
    """Test the Neumann gauge and compatibility on both models."""

    @pytest.mark.parametrize("model", ["rlc", "rl"])
    def test_gauges_differ_by_the_free_direction(self, skewed_params, model):
        """✅ Test the two gauges differ only along the free direction with equal fluxes."""
        bc = BoundaryConditionSpec(family="neumann", left=0.2, right=1.2)
        rhs = RHSSpec.constant(1.0)
        zero, _ = solve(skewed_params, model, bc, rhs, 8, pin="zero")
        mean_zero, _ = solve(skewed_params, model, bc, rhs, 8, pin="mean_zero")
        x = np.linspace(0.1, 0.9, 9)
        gap = mean_zero(x) - zero(x)

        if model == "rlc":
            # free direction is a constant
            assert np.ptp(gap) <= 1e-12
        else:
            # free direction is the kernel (1 - x)^{alpha-beta-1} x^{beta-1}
            alpha, beta = skewed_params.alpha, skewed_params.beta
            ratio = gap / ((1.0 - x) ** (alpha - beta - 1.0) * x ** (beta - 1.0))
            assert np.ptp(ratio) <= 1e-10 * max(1.0, abs(ratio[0]))
        assert abs(gap[0]) > 1e-6
        for point in (0.0, 0.3, 0.7, 1.0):
            assert evaluate_flux(mean_zero, point) == pytest.approx(
                evaluate_flux(zero, point), abs=1e-12
            )
        for point in (0.3, 0.6):
            a = apply_operator(skewed_params, model, zero, point, mode="verification")
            b = apply_operator(skewed_params, model, mean_zero, point, mode="verification")
            assert a == pytest.approx(b, abs=1e-5)
            assert a == pytest.approx(1.0, abs=1e-4)

    @pytest.mark.parametrize("model", ["rlc", "rl"])
    @pytest.mark.parametrize("seed", range(20))
    def test_flux_difference_is_integral_of_f(self, skewed_params, model, seed):
        """✅ Test flux(1) - flux(0) = int f for random smooth data, and only then."""
        rng = np.random.default_rng(seed)
        a, c = rng.uniform(-1.0, 1.0, 2)
        b, d = rng.uniform(0.5, 2.0, 2)
        rhs = RHSSpec.from_callable(lambda x: a * np.exp(b * x) + c * np.sin(d * x))
        integral = a * math.expm1(b) / b + c * (1.0 - math.cos(d)) / d
        left = float(rng.uniform(-1.0, 1.0))
        bc = BoundaryConditionSpec(family="neumann", left=left, right=left + integral)
        sol, _ = solve(skewed_params, model, bc, rhs, 32)

        assert evaluate_flux(sol, 1.0) - evaluate_flux(sol, 0.0) == pytest.approx(
            integral, abs=1e-8
        )

        perturbed = BoundaryConditionSpec(
            family="neumann", left=left, right=left + integral + 1e-3
        )
        with pytest.raises(CompatibilityError):
            solve(skewed_params, model, perturbed, rhs, 32)

    def test_rl_incompatible(self, skewed_params):
        """❌ Test the RL model rejects fluxes that do not add up to int f."""
        bc = BoundaryConditionSpec(family="neumann", left=0.2, right=0.9)

        with pytest.raises(CompatibilityError) as excinfo:
            solve(skewed_params, "rl", bc, RHSSpec.from_callable(np.exp), 16)

        assert excinfo.value.residual == pytest.approx(abs(0.7 - math.expm1(1.0)), rel=1e-8)


class TestWeakRL:
    """Test the RL weak solution."""

    def test_manufactured_mode(self, symmetric_params):
        """✅ Test f = kappa_4 G_2^{(beta+1, alpha-beta+1)} gives w_4 = 1."""
        kappa4 = symmetric_params.ladder("kappa", 4)
        basis = symmetric_params.rl_rhs_basis
        rhs = RHSSpec.from_callable(lambda x: kappa4 * eval_G(basis, 2, x))

        w = solve_rl_weak(symmetric_params, rhs, 6)
        want = np.zeros(7)
        want[4] = 1.0

        assert_allclose(w, want, atol=1e-12)

    def test_low_truncation(self, symmetric_params):
        """✅ Test n < 2 has no free coefficients."""
        assert_allclose(solve_rl_weak(symmetric_params, RHSSpec.constant(1.0), 1), [0.0, 0.0])

    def test_residual_check(self, symmetric_params, monkeypatch):
        """❌ Test an impossible residual tolerance trips the check."""
        monkeypatch.setattr(settings, "rl_weak_residual_tol", 1e-300)

        with pytest.raises(IndexConventionError, match="index mapping"):
            solve_rl_weak(symmetric_params, RHSSpec.constant(1.0), 4)

    def test_skip_verification(self, symmetric_params, monkeypatch):
        """✅ Test verify=False skips the residual check."""
        monkeypatch.setattr(settings, "rl_weak_residual_tol", 1e-300)

        w = solve_rl_weak(symmetric_params, RHSSpec.constant(1.0), 4, verify=False)

        assert w[2] != 0.0


class TestFluxSeries:
    """Test the flux-constant series."""

    def test_one_sided_is_ill_posed(self):
        """❌ Test r = 1 refuses the series at x = 0 unless forced."""
        params = FractionalModelParams.from_alpha_r(1.5, 1.0)
        coeffs = 1.0 / (np.arange(20) + 1.0) ** 4

        with pytest.raises(IllPosedError):
            flux_series_sum(params, coeffs)

        forced = flux_series_sum(params, coeffs, force=True)
        assert forced.terms == 20

    def test_r_zero_is_ill_posed_at_one(self):
        """❌ Test r = 0 refuses the series at x = 1."""
        params = FractionalModelParams.from_alpha_r(1.5, 0.0)

        with pytest.raises(IllPosedError):
            flux_series_sum(params, np.ones(4), at_one=True)

    def test_array_sum(self, symmetric_params):
        """✅ Test the series is the flux of the regular part at 0, negated."""
        bc = BoundaryConditionSpec(family="dirichlet")
        sol, _ = solve(symmetric_params, "rlc", bc, RHSSpec.polynomial([1.0, 3.0]), 6)
        series = flux_series_sum(symmetric_params, sol.regular_coeffs)
        mu = ladder_array(symmetric_params, "mu", 6)

        assert series.value == pytest.approx(
            float(np.sum(mu * sol.regular_coeffs * eval_G_at_zero(symmetric_params, 7)))
        )
        assert series.tail <= settings.series_tol

    def test_callable_matches_array(self, symmetric_params):
        """✅ Test a callable coefficient rule converges to the array sum."""
        by_rule = flux_series_sum(symmetric_params, lambda i: 0.5**i)
        by_array = flux_series_sum(symmetric_params, 0.5 ** np.arange(80.0))

        assert by_rule.value == pytest.approx(by_array.value, rel=1e-12)
        assert by_rule.tail <= settings.series_tol

    def test_callable_divergence(self, symmetric_params, monkeypatch):
        """❌ Test a non-decaying rule exhausts the term budget."""
        monkeypatch.setattr(settings, "series_max_terms", 2048)

        with pytest.raises(SeriesDivergenceError, match="did not settle") as excinfo:
            flux_series_sum(symmetric_params, lambda i: np.ones_like(i))

        assert 1024 in excinfo.value.partial_sums

    @pytest.mark.parametrize("variant", ["rlc", "rl"])
    def test_flux_constant(self, symmetric_params, variant):
        """✅ Test C1 = (A + S) / sigma_0 for RLC and -(A + S) / mu_{-1} for RL."""
        coeffs = 0.5 ** np.arange(10.0)
        s = flux_series_sum(symmetric_params, coeffs).value
        c1 = flux_constant_series(symmetric_params, coeffs, 0.4, variant)

        if variant == "rlc":
            assert c1 == pytest.approx((0.4 + s) / symmetric_params.ladder("sigma", 0))
        else:
            assert c1 == pytest.approx(-(0.4 + s) / symmetric_params.mu_minus_one)


class TestIntegrals:
    """Test plain integrals of f."""

    def test_constant(self, symmetric_params):
        """✅ Test the integral of a negative constant and of its magnitude."""
        assert rhs_integral(symmetric_params, RHSSpec.constant(-2.0), 8) == pytest.approx(
            (-2.0, 2.0)
        )

    def test_polynomial(self, symmetric_params):
        """✅ Test the integral of x(1-x) is 1/6."""
        value, magnitude = rhs_integral(symmetric_params, RHSSpec.polynomial([0.0, 1.0, -1.0]), 8)

        assert value == pytest.approx(1.0 / 6.0, rel=1e-14)
        assert magnitude == pytest.approx(1.0 / 6.0, rel=1e-14)
