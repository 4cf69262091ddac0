import argparse
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import sentry_sdk

from fracspec.cli import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_R_GRID,
    DEFAULT_VERIFY_N_MAX,
    EXIT_FAILURE,
    cmd_diagnose,
    cmd_solve,
    cmd_spectrum,
    cmd_verify,
    load_run_config,
)
from fracspec.config import settings
from fracspec.exceptions import ConfigError, FracSpecError
from fracspec.logging import logger


class _ArgumentParser(argparse.ArgumentParser):
    """Report usage errors as ``ConfigError`` instead of exiting."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(message, [message])


def _parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = _ArgumentParser(
        prog="fracspec",
        description="Spectral solver and verification toolkit for fractional diffusion.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("solve", "Solve a boundary value problem"),
        ("spectrum", "Tabulate the eigenvalue ladders"),
        ("diagnose", "Coefficient decay and regularity diagnostics"),
    ):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", type=Path, required=True)
        sub.add_argument("--out-dir", type=Path, default=Path())

    verify = commands.add_parser("verify", help="Check the eigenrelations numerically")
    verify.add_argument("--out-dir", type=Path, default=Path())
    verify.add_argument("--alpha", type=float, nargs="+", default=list(DEFAULT_ALPHA_GRID))
    verify.add_argument("--r", type=float, nargs="+", default=list(DEFAULT_R_GRID))
    verify.add_argument("--n-max", type=int, default=DEFAULT_VERIFY_N_MAX)
    verify.add_argument(
        "--fault", type=float, default=0.0, help="Shift c** on the closed-form side"
    )
    return parser.parse_args(argv)


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "verify":
        return cmd_verify(args.out_dir, args.alpha, args.r, args.n_max, args.fault)
    config = load_run_config(args.config)
    if args.command == "solve":
        return cmd_solve(config, args.out_dir)
    if args.command == "spectrum":
        return cmd_spectrum(config, args.out_dir)
    return cmd_diagnose(config, args.out_dir)


def _release() -> str | None:
    try:
        return f"fracspec@{version('fracspec')}"
    except PackageNotFoundError:
        return None


def main(argv: list[str] | None = None) -> int:
    if settings.sentry_dsn:
        sentry_sdk.init(
            dsn=settings.sentry_dsn,
            environment=settings.sentry_environment,
            traces_sample_rate=settings.sentry_traces_sample_rate,
            release=_release(),
            attach_stacktrace=True,
        )
        logger.info(
            "Sentry initialized environment={environment} traces_sample_rate={traces_sample_rate}",
            environment=settings.sentry_environment,
            traces_sample_rate=settings.sentry_traces_sample_rate,
        )

    try:
        args = _parse_args(argv)
        logger.info("Starting fracspec command={command}", command=args.command)
        sentry_sdk.set_tag("fracspec.command", args.command)
        return _dispatch(args)
    except ConfigError as e:
        logger.error("Configuration error: {error}", error=str(e))
        for line in e.diagnostics:
            logger.error("  {line}", line=line)
        return EXIT_FAILURE
    except FracSpecError as e:
        logger.error("Command failed: {error}", error=str(e))
        sentry_sdk.capture_exception(e)
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
