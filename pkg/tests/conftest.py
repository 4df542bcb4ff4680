import numpy as np
import pytest

from weaklab.core import PointerGrid
from weaklab.gallery import (boosted_pointer, gaussian_pointer, mixture_pointer,
                             superposition_pointer, thermal_pointer)

_CRITERIA = []


@pytest.fixture(scope="session")
def grid():
    return PointerGrid(1024, 40.0)


@pytest.fixture(scope="session")
def small_grid():
    return PointerGrid(256, 40.0)


@pytest.fixture(scope="session")
def zero_current_pointers(grid):
    return {
        "gaussian": gaussian_pointer(1.0, grid=grid),
        "thermal": thermal_pointer(1.0, 1.0, grid=grid),
        "superposition": superposition_pointer(6.0, 1.0, grid=grid),
        "mixture": mixture_pointer(6.0, 1.0, grid=grid),
    }


@pytest.fixture(scope="session")
def boosted(grid):
    return boosted_pointer(1.0, 1.0, grid=grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one acceptance-criterion verdict; printed in the terminal summary."""

    def record(number, title, passed, detail=""):
        _CRITERIA.append((number, title, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {title} -- {detail}")
