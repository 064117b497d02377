import functools

import pytest

from convnorm.engine import IterationConfig
from convnorm.laplace import reproduce_table1, solve_laplace_norm

from reference import TABLE_P


@functools.lru_cache(maxsize=None)
def laplace_run(p, N=512, L=16.0):
    return solve_laplace_norm(p, N, L, IterationConfig())


@pytest.fixture(scope="session")
def table_rows():
    return {r.p: r for r in reproduce_table1(ps=TABLE_P)}


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split("] ", 1)[-1]):
            terminalreporter.write_line(line)
