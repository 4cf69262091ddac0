"""Error hierarchy for fracspec.

Every error raised on purpose by the package derives from ``FracSpecError`` so
the CLI can translate failures into exit codes in one place.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from fracspec.spectral_solver import WellPosednessReport


class FracSpecError(Exception):
    """Base class for all fracspec errors."""


class DomainError(FracSpecError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ParameterError(FracSpecError, ValueError):
    """Model parameters (alpha, r, beta, c**) are inconsistent or degenerate."""


class QuadratureConstructionError(FracSpecError):
    """The Golub-Welsch eigenvalue solve did not converge."""


class QuadratureEvaluationError(FracSpecError):
    """An integrand returned a non-finite value at a quadrature node."""

    def __init__(self, msg: str, node: float) -> None:
        super().__init__(msg)
        self.node = node


class AccuracyError(FracSpecError):
    """Doubling the quadrature order up to the cap never reached agreement."""


class IllPosedError(FracSpecError):
    """The boundary value problem is ill-posed for the given (model, BC, r)."""

    def __init__(self, report: WellPosednessReport) -> None:
        super().__init__(f"{report.status}: {report.rule}")
        self.report = report


class CompatibilityError(FracSpecError):
    """Neumann data violate B - A = integral of f beyond tolerance."""

    def __init__(
        self, residual: float, tolerance: float, report: WellPosednessReport
    ) -> None:
        super().__init__(
            f"Neumann compatibility violated: |B - A - int f| = {residual:.3e} "
            f"> {tolerance:.3e}"
        )
        self.residual = residual
        self.tolerance = tolerance
        self.report = report


class SeriesDivergenceError(FracSpecError):
    """The flux-constant series failed the Cauchy criterion within budget."""

    def __init__(self, msg: str, partial_sums: Any = None) -> None:
        super().__init__(msg)
        self.partial_sums = partial_sums


class IndexConventionError(FracSpecError):
    """The RL weak solution failed its operator-residual check."""


class UndefinedRateError(FracSpecError):
    """Too few nonzero coefficients to fit a decay rate."""


class ConfigError(FracSpecError, ValueError):
    """A run configuration file could not be parsed or validated."""

    def __init__(self, msg: str, diagnostics: list[str] | None = None) -> None:
        super().__init__(msg)
        self.diagnostics = diagnostics or []
