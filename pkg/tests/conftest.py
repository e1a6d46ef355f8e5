import math

import numpy as np
import pytest
from hypothesis import settings

from degsw.grid import Grid2D

settings.register_profile("ci", max_examples=25, deadline=None)
settings.load_profile("ci")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def grid64():
    return Grid2D(64)


@pytest.fixture
def grid32():
    return Grid2D(32)


def smooth_scalar(grid):
    x1, x2 = grid.mesh()
    return np.sin(x1) * np.cos(2 * x2) + 0.3 * np.cos(3 * x1 + x2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


TWO_PI = 2 * math.pi
