import numpy as np
import pytest

from frontlab.grid import TemperatureField, build_grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_field(grid, rng):
    return TemperatureField(grid, rng.random((grid.nx, grid.ny)))


@pytest.fixture
def small_grid():
    return build_grid(1.0, 8, 0.0, 4.0, 32)


# one summary line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance_line():
    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
