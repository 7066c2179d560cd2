"""Shared fixtures: the sigma_y=10 model, the two reference grids, and
session-cached solver runs (the closed-form solves are cheap but several test
files assert against the same frozen digits)."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from noisealloc.core import BinDistribution, NoiseGrid
from noisealloc.linear import (
    ClosedFormLinearTrainer,
    LinearGaussianModel,
    baseline_table,
    grid_search_constrained,
    grid_search_minimax,
)
from noisealloc.solvers import SolverConfig, solve_constrained, solve_minimax_gap

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def model():
    return LinearGaussianModel(sigma_y=10.0)


@pytest.fixture(scope="session")
def grid10():
    return NoiseGrid(0.0, 10.0, 40)


@pytest.fixture(scope="session")
def grid20():
    return NoiseGrid(0.0, 20.0, 40)


@pytest.fixture(scope="session")
def base10(model, grid10):
    return baseline_table(model, grid10)


@pytest.fixture(scope="session")
def base20(model, grid20):
    return baseline_table(model, grid20)


@pytest.fixture(scope="session")
def canonical_p1(model, grid10, base10):
    """Constrained solve at epsilon=9 on [0,10] x 40, auto step."""
    trainer = ClosedFormLinearTrainer(model, grid10)
    return solve_constrained(trainer, base10, SolverConfig(epsilon=9.0))


@pytest.fixture(scope="session")
def canonical_p2(model, grid10, base10):
    """Minimax solve on [0,10] x 40, projection step, long round budget."""
    trainer = ClosedFormLinearTrainer(model, grid10)
    return solve_minimax_gap(trainer, base10, SolverConfig(max_rounds=2000))


@pytest.fixture(scope="session")
def canonical_log(model, grid10, base10):
    """Multiplicative-cap solve at epsilon=7 on [0,10] x 40, auto step."""
    trainer = ClosedFormLinearTrainer(model, grid10)
    return solve_constrained(
        trainer, base10, SolverConfig(epsilon=7.0, max_rounds=1000, log_scale=True)
    )


@pytest.fixture(scope="session")
def oracle_minimax10(model, grid10):
    return grid_search_minimax(model, grid10)


@pytest.fixture(scope="session")
def oracle_constrained10(model, grid10):
    return grid_search_constrained(model, BinDistribution.uniform(grid10), 9.0, grid10)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240814)
