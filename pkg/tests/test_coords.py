import numpy as np
import pytest

from planar_mhd.coords import EULER_COLUMNS, flow_map, to_eulerian
from planar_mhd.discretization import Grid
from planar_mhd.errors import CrossingError, InputError, RangeError
from planar_mhd.solver import SolverConfig, run
from planar_mhd.studies import power_law_bump_data

from conftest import dilation_state, rest_state


class TestFlowMap:
    def test_rest_state(self, small_grid):
        fm = flow_map([rest_state(small_grid, t=t) for t in (0.0, 0.5, 1.0)])
        for eta in fm.eta:
            assert np.array_equal(eta, small_grid.y)

    def test_dilation(self, params, small_grid):
        a = 0.5
        ts = np.linspace(0.0, 1.0, 11)
        fm = flow_map([dilation_state(small_grid, a, t, params) for t in ts])
        np.testing.assert_allclose(fm.eta[-1], small_grid.y * (1 + a), rtol=1e-14, atol=1e-14)
        assert np.max(fm.defect) <= 1e-12

    def test_defect_second_order_in_snapshot_spacing(self, params):
        g = Grid(4.0, 129)
        init = power_law_bump_data(g, params)
        defects = []
        for n in (40, 80, 160):
            times = tuple(np.linspace(0.0, 0.2, n + 1)[1:-1])
            cfg = SolverConfig(scheme="explicit-rk2", cfl=0.9, dt_max=1.0, T_end=0.2,
                               snapshot_times=times, output_every=10**6)
            defects.append(flow_map(run(init, cfg, params).snapshots).defect[-1])
        rates = np.log2(np.array(defects[:-1]) / defects[1:])
        assert np.all(rates > 1.8)

    def test_crossing(self, small_grid):
        a = rest_state(small_grid)
        b = rest_state(small_grid, t=1.0)
        b.u[:] = -3.0 * small_grid.y
        with pytest.raises(CrossingError):
            flow_map([a, b])

    def test_must_start_at_zero(self, small_grid):
        with pytest.raises(InputError):
            flow_map([rest_state(small_grid, t=0.1)])


class TestToEulerian:
    def test_rest_state_identity(self, params, small_grid):
        s = rest_state(small_grid, P=1.5)
        s.h[0] = np.sin(small_grid.y)
        x = np.linspace(-3.0, 3.0, 41)
        ef = to_eulerian(s, small_grid.y, x, params)
        assert set(ef.columns) == set(EULER_COLUMNS)
        np.testing.assert_allclose(ef.columns["hx"], np.interp(x, small_grid.y, s.h[0]),
                                   rtol=1e-15)
        np.testing.assert_allclose(ef.y_of_x, x, rtol=1e-15, atol=1e-15)

    def test_dilation_density(self, params):
        g = Grid(4.0, 1025)
        a, t = 0.5, 1.0
        s = dilation_state(g, a, t, params)
        s.rho0 = 1 / (1 + g.y ** 2)
        eta = g.y * (1 + a * t)
        x = np.linspace(-5.0, 5.0, 201)
        ef = to_eulerian(s, eta, x, params)
        y = x / (1 + a * t)
        np.testing.assert_allclose(ef.rho, 1 / (1 + y ** 2) / (1 + a * t), atol=1e-5)

    def test_mass_conserved(self, params):
        g = Grid(4.0, 257)
        times = tuple(np.linspace(0.0, 0.2, 21)[1:-1])
        cfg = SolverConfig(scheme="explicit-rk2", cfl=0.9, dt_max=1.0, T_end=0.2,
                           snapshot_times=times, output_every=10**6)
        res = run(power_law_bump_data(g, params), cfg, params)
        fm = flow_map(res.snapshots)
        x = np.linspace(fm.eta[-1][0], fm.eta[-1][-1], 8001)
        ef = to_eulerian(res.state, fm.eta[-1], x, params)
        mass_x = np.trapezoid(ef.rho, x)
        mass_y = np.trapezoid(res.state.rho0, g.y)
        assert mass_x == pytest.approx(mass_y, rel=1e-4)

    def test_outside_image(self, params, small_grid):
        with pytest.raises(RangeError):
            to_eulerian(rest_state(small_grid), small_grid.y, np.array([5.0]), params)

    def test_positions_must_increase(self, params, small_grid):
        with pytest.raises(CrossingError):
            to_eulerian(rest_state(small_grid), small_grid.y[::-1].copy(), np.array([0.0]),
                        params)
