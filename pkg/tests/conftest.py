"""Shared pytest fixtures for fracspec tests."""

import pytest
from loguru import logger

from fracspec.model_params import FractionalModelParams
from fracspec.quadrature import clear_rule_cache


@pytest.fixture(autouse=True)
def disable_loguru():
    """Disable loguru output during tests for cleaner output."""
    logger.disable("fracspec")
    yield
    logger.enable("fracspec")


@pytest.fixture
def fresh_rules():
    """Start and finish with an empty Gauss-Jacobi rule cache."""
    clear_rule_cache()
    yield
    clear_rule_cache()


@pytest.fixture
def symmetric_params():
    """alpha = 1.5, r = 0.5, so beta = 0.75 and c** = -1/sqrt(2)."""
    return FractionalModelParams.from_alpha_r(1.5, 0.5)


@pytest.fixture
def skewed_params():
    """A two-sided case with beta away from the midpoint."""
    return FractionalModelParams.from_alpha_r(1.7, 0.3)
