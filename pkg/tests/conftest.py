import math

import numpy as np
import pytest

from winnerscurse.simulation import Scenario, draw_significant_statistic
from winnerscurse.stats import TestContext

ORACLE_ALPHAS = (0.05, 1e-4, 1e-6)
ORACLE_POWERS = (0.1, 0.5, 0.9)


def grid_contexts(seed=20240101):
    """One significant statistic per (alpha, power) cell of the 3x3 validation grid."""
    out = []
    for i, alpha in enumerate(ORACLE_ALPHAS):
        for j, power in enumerate(ORACLE_POWERS):
            sc = Scenario(math.log(1.1), 1.6855, alpha, power)
            rng = np.random.default_rng([seed, i, j])
            out.append(((alpha, power), TestContext(draw_significant_statistic(sc, rng), alpha, sc.se)))
    return out


@pytest.fixture(scope="session")
def oracle_grid():
    return grid_contexts()


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running statistical checks")


ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    """Record one acceptance line; printed again in the terminal summary."""
    line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
