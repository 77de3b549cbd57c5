from pathlib import Path

import numpy as np
import pytest

from pemdesign.prices import cluster, synthetic_prices
from pemdesign.schedule_opt import ScheduleProblem, solve_schedule

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


@pytest.fixture(scope="session")
def skewed_year():
    return synthetic_prices("duration", 62.55, 60.0, seed=0)


@pytest.fixture(scope="session")
def rep2(skewed_year):
    return cluster(skewed_year, 2, 0)


@pytest.fixture(scope="session")
def small_problem(rep2):
    return ScheduleProblem(n_cells=90_000, storage_days=0.5, rep_days=rep2, dt_hours=1.0)


@pytest.fixture(scope="session")
def solved(small_problem):
    sched = solve_schedule(small_problem)
    assert sched.success
    return sched


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
