"""Batch commands: solve, verify, spectrum and diagnose.

Run configurations are flat ``key = value`` files. Every command writes
deterministic files into an output directory: CSV with 17 significant digits,
JSON with sorted keys, no timestamps.
"""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Iterable, Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Literal

import numpy as np
import sentry_sdk
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from rich.console import Console
from rich.table import Table

from fracspec.config import settings
from fracspec.diagnostics import (
    decay_rates,
    derivative_norm_check,
    dyadic_windows,
    eigenrelation_suite,
    flux_series_bound_check,
    ill_posedness_probe,
    shift_check,
)
from fracspec.exceptions import (
    CompatibilityError,
    ConfigError,
    IllPosedError,
    UndefinedRateError,
)
from fracspec.jacobi_core import gamma_ratio
from fracspec.logging import logger
from fracspec.model_params import FractionalModelParams, ladder_array
from fracspec.spectral_solver import (
    BoundaryConditionSpec,
    RHSSpec,
    SpectralSolution,
    WellPosednessReport,
    evaluate_flux,
    project_rhs,
    solve,
    solve_regular,
)
from fracspec.types import BCFamily, Model, PinMode

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_ILL_POSED = 2

DEFAULT_ALPHA_GRID = (1.2, 1.5, 1.8)
DEFAULT_R_GRID = (0.0, 0.3, 0.5, 0.7, 1.0)
DEFAULT_VERIFY_N_MAX = 8


class RunConfig(BaseModel):
    """One run, as read from a ``key = value`` file. Unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: float = Field(gt=1.0, lt=2.0)
    r: float = Field(ge=0.0, le=1.0)
    model: Model = "rlc"
    bc: BCFamily = "dirichlet"
    bc_left: float = 0.0
    bc_right: float = 0.0
    rhs: Literal["constant", "monomial", "polynomial", "jacobi", "log_series"] = "constant"
    rhs_value: float = 1.0
    rhs_coeffs: tuple[float, ...] = ()
    n: int = Field(default_factory=lambda: settings.default_truncation, ge=0)
    grid_size: int = Field(101, ge=2)
    pin_constant: PinMode = "zero"
    compat_rtol: float | None = Field(None, gt=0.0)
    quad_order_cap: int | None = None
    shift_order: int = Field(1, ge=1)
    decay_i_min: int | None = Field(None, ge=1)
    decay_i_max: int | None = Field(None, ge=1)

    @field_validator("rhs_coeffs", mode="before")
    @classmethod
    def split_coefficients(cls, v: Any) -> Any:
        if isinstance(v, str):
            return tuple(float(part) for part in v.split(",") if part.strip())
        return v

    @field_validator("quad_order_cap")
    @classmethod
    def cap_allows_doubling(cls, v: int | None) -> int | None:
        if v is not None and v < 2 * settings.quad_order_initial:
            msg = f"must be at least twice quad_order_initial ({settings.quad_order_initial})"
            raise ValueError(msg)
        return v

    def params(self) -> FractionalModelParams:
        return FractionalModelParams.from_alpha_r(self.alpha, self.r)

    def boundary(self) -> BoundaryConditionSpec:
        return BoundaryConditionSpec(family=self.bc, left=self.bc_left, right=self.bc_right)

    def rhs_spec(self) -> RHSSpec:
        match self.rhs:
            case "constant":
                return RHSSpec.constant(self.rhs_value)
            case "monomial":
                return RHSSpec.monomial(self.rhs_value)
            case "polynomial":
                return RHSSpec.polynomial(self.rhs_coeffs)
            case "jacobi":
                return RHSSpec.jacobi(self.rhs_coeffs)
        return RHSSpec.log_series()


def _key_lines(text: str) -> dict[str, int]:
    lines = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key = stripped.removeprefix("export ").split("=", 1)[0].strip().lower()
        lines.setdefault(key, number)
    return lines


def load_run_config(path: Path) -> RunConfig:
    """
    Parse and validate a run configuration file.

    Raises:
        ConfigError: With one ``line N: key: problem`` diagnostic per bad key
    """
    if not path.is_file():
        msg = f"Config file not found: {path}"
        raise ConfigError(msg, [msg])
    text = path.read_text(encoding="utf-8")
    lines = _key_lines(text)
    raw = {k.lower(): v for k, v in dotenv_values(path).items()}

    diagnostics = [
        f"line {lines.get(key, '?')}: {key}: missing value"
        for key, value in raw.items()
        if value is None
    ]
    if diagnostics:
        msg = f"Invalid config {path}"
        raise ConfigError(msg, diagnostics)

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        for error in e.errors():
            key = str(error["loc"][0]) if error["loc"] else "?"
            diagnostics.append(f"line {lines.get(key, '?')}: {key}: {error['msg']}")
        msg = f"Invalid config {path}"
        raise ConfigError(msg, diagnostics) from e


@contextmanager
def overridden_settings(config: RunConfig) -> Iterator[None]:
    """Apply the config's tolerance overrides for the duration of a command."""
    overrides = {
        "compat_rtol": config.compat_rtol,
        "quad_order_cap": config.quad_order_cap,
    }
    saved = {key: getattr(settings, key) for key in overrides}
    try:
        for key, value in overrides.items():
            if value is not None:
                setattr(settings, key, value)
        yield
    finally:
        for key, value in saved.items():
            setattr(settings, key, value)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(_fmt(v) if isinstance(v, float) else v for v in row)


def _write_json(path: Path, payload: dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _json_float(value: float | None) -> float | str | None:
    if value is None or math.isfinite(value):
        return value
    return "inf" if value > 0 else "-inf"


def _params_payload(params: FractionalModelParams) -> dict[str, float]:
    return {
        "alpha": params.alpha,
        "r": params.r,
        "beta": params.beta,
        "c_star_star": params.c_star_star,
    }


def _solution_payload(sol: SpectralSolution) -> dict[str, Any]:
    return {
        "tail_ratio": sol.tail_ratio,
        "series_tail": _json_float(sol.series_tail),
        "kernel_amplitudes": list(sol.kernel_amplitudes),
        "additive_constant": sol.additive_constant,
        "gauge_free": sol.gauge_free,
        "singular_terms": [
            {"amplitude": t.amplitude, "p": t.p, "q": t.q} for t in sol.singular_terms
        ],
    }


def cmd_solve(config: RunConfig, out_dir: Path) -> int:
    """
    Solve one problem and write ``solution.csv``, ``coefficients.csv`` and
    ``report.json``.

    Returns:
        0 when solved, 2 for ill-posed or incompatible data (the report is
        still written)
    """
    params = config.params()
    sentry_sdk.add_breadcrumb(
        category="cli",
        message="Running solve",
        level="info",
        data={"model": config.model, "bc": config.bc, "alpha": config.alpha, "r": config.r},
    )
    payload: dict[str, Any] = {
        "config": config.model_dump(mode="json"),
        "params": _params_payload(params),
    }
    sol: SpectralSolution | None = None
    report: WellPosednessReport
    with overridden_settings(config):
        try:
            sol, report = solve(
                params,
                config.model,
                config.boundary(),
                config.rhs_spec(),
                config.n,
                pin=config.pin_constant,
            )
        except (IllPosedError, CompatibilityError) as e:
            report = e.report
            logger.error("Problem rejected: {error}", error=str(e))

    payload.update(
        status=report.status,
        rule=report.rule,
        compatibility_residual=report.compatibility_residual,
    )
    if sol is None:
        _write_json(out_dir / "report.json", payload)
        return EXIT_ILL_POSED

    payload.update(_solution_payload(sol))
    _write_json(out_dir / "report.json", payload)

    grid = np.linspace(0.0, 1.0, config.grid_size)
    values = np.asarray(sol.evaluate(grid))
    fluxes = np.asarray(evaluate_flux(sol, grid))
    _write_csv(
        out_dir / "solution.csv",
        ("x", "u", "flux"),
        ((float(x), float(u), float(f)) for x, u, f in zip(grid, values, fluxes, strict=True)),
    )
    _write_csv(
        out_dir / "coefficients.csv",
        ("i", "f_i", "c_i"),
        (
            (i, float(f), float(c))
            for i, (f, c) in enumerate(zip(sol.rhs.coeffs, sol.regular_coeffs, strict=True))
        ),
    )
    logger.info("Wrote solve outputs out_dir={out_dir}", out_dir=str(out_dir))
    return EXIT_OK


def cmd_verify(
    out_dir: Path,
    alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
    r_grid: Sequence[float] = DEFAULT_R_GRID,
    n_max: int = DEFAULT_VERIFY_N_MAX,
    fault: float = 0.0,
    console: Console | None = None,
) -> int:
    """Run the identity suite; ``verify.csv`` gets one row per check."""
    sentry_sdk.add_breadcrumb(
        category="cli",
        message="Running verify",
        level="info",
        data={"alpha": list(alpha_grid), "r": list(r_grid), "n_max": n_max, "fault": fault},
    )
    rows = eigenrelation_suite(alpha_grid, r_grid, n_max, fault=fault)
    _write_csv(
        out_dir / "verify.csv",
        ("identity", "alpha", "r", "n", "max_error", "tolerance", "passed"),
        (
            (row.identity, row.alpha, row.r, row.n, row.max_error, row.tolerance, row.passed)
            for row in rows
        ),
    )

    table = Table(title="Eigenrelation checks")
    for column in ("identity", "rows", "failed", "max error", "tolerance"):
        table.add_column(column)
    for identity in dict.fromkeys(row.identity for row in rows):
        group = [row for row in rows if row.identity == identity]
        failed = sum(not row.passed for row in group)
        table.add_row(
            identity,
            str(len(group)),
            f"[red]{failed}[/red]" if failed else "0",
            f"{max(row.max_error for row in group):.3e}",
            f"{group[0].tolerance:.0e}",
        )
    (console or Console()).print(table)

    if all(row.passed for row in rows):
        return EXIT_OK
    logger.error("Identity checks failed count={count}", count=sum(not r.passed for r in rows))
    return EXIT_FAILURE


def cmd_spectrum(config: RunConfig, out_dir: Path, console: Console | None = None) -> int:
    """Ladders for ``i <= n`` with their cross-ladder identity residuals."""
    params = config.params()
    n = config.n
    lam = ladder_array(params, "lambda", n)
    mu = ladder_array(params, "mu", n)
    sigma = ladder_array(params, "sigma", n)
    kappa = ladder_array(params, "kappa", n)
    i = np.arange(n + 1, dtype=float)
    alpha = params.alpha
    kappa_identity = np.abs(
        kappa + sigma * np.asarray(gamma_ratio([i + alpha + 1.0], [i + alpha - 1.0]))
    ) / np.abs(kappa)
    lambda_identity = np.abs(lam + mu * (i + alpha)) / np.abs(lam)

    _write_csv(
        out_dir / "spectrum.csv",
        ("i", "lambda", "mu", "sigma", "kappa", "kappa_identity", "lambda_identity"),
        (
            (int(k), *(float(v) for v in row))
            for k, row in zip(
                i, zip(lam, mu, sigma, kappa, kappa_identity, lambda_identity), strict=True
            )
        ),
    )

    console = console or Console()
    console.print(
        f"alpha={_fmt(alpha)} r={_fmt(params.r)} beta={_fmt(params.beta)} "
        f"c**={_fmt(params.c_star_star)} mu_-1={_fmt(params.mu_minus_one)}"
    )
    table = Table(title="Eigenvalue ladders")
    for column in ("i", "lambda", "mu", "sigma", "kappa", "kappa id", "lambda id"):
        table.add_column(column, justify="right")
    for k in range(n + 1):
        table.add_row(
            str(k),
            *(
                f"{v:.10g}"
                for v in (lam[k], mu[k], sigma[k], kappa[k], kappa_identity[k], lambda_identity[k])
            ),
        )
    console.print(table)
    return EXIT_OK


def _decay_payload(
    coeffs: np.ndarray, lo: int | None, hi: int | None
) -> list[dict[str, Any]]:
    n = coeffs.size - 1
    windows: tuple[tuple[int, int], ...]
    if lo is None and hi is None:
        windows = dyadic_windows(n)
    else:
        windows = ((max(n // 2, 1) if lo is None else lo, n if hi is None else hi),)
    payload = []
    for (i_min, i_max), report in zip(windows, decay_rates(coeffs, windows), strict=True):
        if isinstance(report, UndefinedRateError):
            payload.append({"i_min": i_min, "i_max": i_max, "rate": None, "reason": str(report)})
            continue
        payload.append(
            {
                "i_min": report.i_min,
                "i_max": report.i_max,
                "rate": report.rate,
                "residual": report.residual,
                "tail_ratio": report.tail_ratio,
            }
        )
    return payload


def cmd_diagnose(config: RunConfig, out_dir: Path) -> int:
    """
    Regularity diagnostics for one configuration, written to ``diagnostics.json``.

    One-sided runs (``r`` of 0 or 1) also carry the ill-posedness probe.
    """
    params = config.params()
    rhs = config.rhs_spec()
    sentry_sdk.add_breadcrumb(
        category="cli",
        message="Running diagnose",
        level="info",
        data={"alpha": config.alpha, "r": config.r, "n": config.n},
    )
    with overridden_settings(config):
        spectral = project_rhs(params, rhs, config.n)
        c = solve_regular(params, spectral)
        lam = ladder_array(params, "lambda", spectral.n)
        shift = shift_check(params, rhs, config.shift_order, spectral.n)
        norms = derivative_norm_check(params, c, spectral.coeffs)

    payload: dict[str, Any] = {
        "config": config.model_dump(mode="json"),
        "params": _params_payload(params),
        "decay": {
            "solution": _decay_payload(c, config.decay_i_min, config.decay_i_max),
            "rhs_over_lambda": _decay_payload(
                spectral.coeffs / lam, config.decay_i_min, config.decay_i_max
            ),
        },
        "shift_check": {
            "j": shift.j,
            "passed": shift.passed,
            "inconclusive": shift.inconclusive,
            "windows": [
                {
                    "i_min": w.i_min,
                    "i_max": w.i_max,
                    "ratio": w.ratio,
                    "bound": w.bound,
                    "passed": w.passed,
                }
                for w in shift.windows
            ],
        },
        "derivative_norm": {
            "derivative_norm": norms.derivative_norm,
            "rhs_norm": norms.rhs_norm,
            "constant": norms.constant,
            "passed": norms.passed,
        },
    }
    if params.r < 1.0:
        blocks = flux_series_bound_check(params, spectral.coeffs)
        payload["flux_series_blocks"] = [
            {"i_min": b.i_min, "i_max": b.i_max, "block_sum": b.block_sum, "bound": b.bound}
            for b in blocks
        ]
    if params.r in (0.0, 1.0):
        variant = "flux_at_zero" if params.r == 1.0 else "flux_at_one"
        probe = ill_posedness_probe(params.alpha, variant)
        payload["probe"] = {
            "variant": probe.variant,
            "ns": list(probe.ns),
            "flux_partial_sums": list(probe.flux_partial_sums),
            "norm_partial_sums": list(probe.norm_partial_sums),
            "loglog_slope": probe.loglog_slope,
            "loglog_intercept": probe.loglog_intercept,
            "flux_block_slope": probe.flux_block_slope,
            "norm_block_slope": probe.norm_block_slope,
            "norm_limit": probe.norm_limit,
            "norm_converges": probe.norm_converges,
            "flux_diverges": probe.flux_diverges,
        }
    _write_json(out_dir / "diagnostics.json", payload)
    logger.info("Wrote diagnostics out_dir={out_dir}", out_dir=str(out_dir))
    return EXIT_OK
