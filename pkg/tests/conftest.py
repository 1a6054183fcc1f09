import numpy as np
import pytest

from magnus_lanczos.grid import make_grid
from magnus_lanczos.potential import PotentialModel, static


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def circle64():
    return make_grid(0.0, 2 * np.pi, 64)


@pytest.fixture(scope="session")
def circle32():
    return make_grid(0.0, 2 * np.pi, 32)


@pytest.fixture(scope="session")
def well180():
    return make_grid(-10.0, 10.0, 180)


def sin_times_t():
    """V(x, t) = sin(x) t with exact x-derivatives."""
    derivs = {a: (lambda x, t, a=a: _dsin(x, a) * t) for a in range(1, 7)}
    return PotentialModel("sin*t", lambda x, t: np.sin(x) * t, derivs)


def _dsin(x, a):
    return [np.sin, np.cos, lambda y: -np.sin(y), lambda y: -np.cos(y)][a % 4](x)


def smooth_tdep():
    """A smooth, genuinely time-dependent periodic potential."""
    return PotentialModel(
        "smooth",
        lambda x, t: np.cos(x) * (1 + 0.5 * np.sin(3 * t)) + 0.7 * np.sin(2 * x - 2 * t),
    )


ZERO = static("zero", lambda x: 0 * x)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
