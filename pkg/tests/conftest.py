import math

import numpy as np
import pytest

from trendbound.graphmodel import Network
from trendbound.trendmodel import AdoptionParams

LN2 = math.log(2.0)


def star(leaves: int) -> Network:
    return Network(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def path(n: int) -> Network:
    return Network(n, [(i, i + 1) for i in range(n - 1)])


def ring(n: int) -> Network:
    return Network(n, [(i, (i + 1) % n) for i in range(n)])


def flat_params(n: int, s: float = 0.0, beta: float = 1.0) -> AdoptionParams:
    return AdoptionParams(np.full(n, s), beta)


@pytest.fixture
def star4():
    return star(3)


@pytest.fixture
def path3():
    return path(3)


# acceptance criteria report one line each; the lines are repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
