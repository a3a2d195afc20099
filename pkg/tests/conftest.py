import numpy as np
import pytest

from circlab import CircleDiffusionModel, PathRecord


def linear_path(knots, n=401):
    """Piecewise-linear PathRecord through ``(t, x)`` knots, sampled densely."""
    kt, kx = np.array(knots, dtype=float).T
    t = np.linspace(kt[0], kt[-1], n)
    t = np.union1d(t, kt)
    return PathRecord(t, np.interp(t, kt, kx), (0, 0), "test")


@pytest.fixture(scope="session")
def zero_model():
    return CircleDiffusionModel.constant(0.0, 1.0)


@pytest.fixture(scope="session")
def const_model():
    return CircleDiffusionModel.constant(0.5, 1.0)


@pytest.fixture(scope="session")
def sine_model():
    return CircleDiffusionModel.fourier(0.0, (), (1.0,))


@pytest.fixture(scope="session")
def tilted_sine_model():
    return CircleDiffusionModel.fourier(0.3, (), (1.0,))


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
