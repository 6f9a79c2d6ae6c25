import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "shocklab", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "shocklab"))

from shocklab.gas import GasLaw, solve_rankine_hugoniot  # noqa: E402
from shocklab.profile import Viscosity, solve_profile  # noqa: E402
from shocklab.solver import Grid3  # noqa: E402

ACCEPTANCE_LINES = []


def _table(gamma, vm, vp, mu=1.0, lam=0.0):
    law = GasLaw(gamma)
    st, c = solve_rankine_hugoniot(vm, vp, 0.0, law)
    return solve_profile(st, c, law, Viscosity(mu, lam))


@pytest.fixture(scope="session")
def weak_table():
    """gamma = 2, v- = 1, v+ = 1.1 with mu = 1, lambda = 0."""
    return _table(2.0, 1.0, 1.1)


@pytest.fixture(scope="session")
def strong_table():
    """gamma = 2, v- = 1, v+ = 2 with mu = 1, lambda = 0."""
    return _table(2.0, 1.0, 2.0)


@pytest.fixture(scope="session")
def make_table():
    return _table


@pytest.fixture
def small_grid():
    return Grid3(12.0, 128, 8, 8)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
