import math

import numpy as np
import pytest

from dipm.params import ParamSet
from dipm.spectral import Grid1D, Grid2D

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid64():
    return Grid2D(64, 64, 2 * math.pi, 2 * math.pi)


@pytest.fixture
def line128():
    return Grid1D(128, 2 * math.pi)


@pytest.fixture
def small_params():
    return ParamSet(alpha=1.5, epsilon=1e-2, n1=32, n2=32, t_end=0.2, sample_dt=0.1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
