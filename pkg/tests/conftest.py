import numpy as np
import pytest

from planar_mhd.discretization import Grid
from planar_mhd.initdata import BumpSpec
from planar_mhd.model import PhysParams
from planar_mhd.state import State
from planar_mhd.studies import power_law_bump_data


@pytest.fixture
def params():
    return PhysParams()


@pytest.fixture
def small_grid():
    return Grid(4.0, 129)


def rest_state(grid, P=1.0, rho0=None, t=0.0):
    N = grid.N
    rho0 = np.ones(N) if rho0 is None else rho0
    return State(t, np.ones(N), np.zeros(N), np.zeros((2, N)), np.zeros((2, N)),
                 np.full(N, float(P)), rho0, grid)


def dilation_state(grid, a, t, params, P_init=1.0):
    from planar_mhd.oracle import dilation_exact

    ex = dilation_exact(t, a, params.gamma, params.lam, P_init)
    N = grid.N
    return State(t, np.full(N, ex.J), ex.u(grid.y), np.zeros((2, N)), np.zeros((2, N)),
                 np.full(N, ex.P), np.ones(N), grid)


@pytest.fixture
def bump_data_small(params, small_grid):
    return power_law_bump_data(small_grid, params)


@pytest.fixture
def standard_bumps():
    return BumpSpec.standard()


# One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
