import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tfelab.loggrid import LogGrid
from tfelab.nonlinear_solver import PicardConfig, bump, picard_solve

settings.register_profile(
    "tfelab",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("tfelab")


@pytest.fixture(scope="session")
def grid():
    return LogGrid()


@pytest.fixture(scope="session")
def small_grid():
    return LogGrid(-12.0, 6.0, 512)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class _Runs:
    """Cache of Picard runs at the default resolution, keyed by amplitude."""

    def __init__(self):
        self._cache = {}

    def get(self, eps: float, **over):
        key = (eps, tuple(sorted(over.items())))
        if key not in self._cache:
            g = over.pop("grid", None) or LogGrid()
            cfg = PicardConfig(grid=g, **over)
            u0 = bump(g, eps)
            self._cache[key] = (u0, picard_solve(u0, cfg))
        return self._cache[key]


@pytest.fixture(scope="session")
def picard_runs():
    return _Runs()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULTS:
            terminalreporter.write_line(line)
