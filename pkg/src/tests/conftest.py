"""Shared pytest fixtures, importable by every test module."""
from src.tests.support.fixtures.simulation_fixtures import (  # noqa: F401
    clean_config,
    gaussian_noise,
    lasso_problem,
    ring_schedule,
    simplex_problem,
)
