"""Centralized logging configuration using loguru."""

import sys

from loguru import logger

from fracspec.config import settings

# Single stderr sink; colorize=True keeps ANSI colors when piped into CI logs
logger.remove()
logger.add(sys.stderr, level=settings.log_level.upper(), colorize=True)

__all__ = ["logger"]
