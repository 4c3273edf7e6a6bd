import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from planar_mhd.discretization import (Grid, ddy, face_flux, integrate, viscous_div,
                                       weighted_l2)
from planar_mhd.errors import DomainError, ParameterError, ShapeError, StateCorruptionError

odd_n = st.integers(2, 300).map(lambda k: 2 * k + 1)
half_widths = st.floats(0.1, 100.0)


class TestGrid:
    def test_spacing_and_ends(self):
        g = Grid(4.0, 9)
        assert g.dy == 1.0
        assert g.y[0] == -4.0 and g.y[-1] == 4.0 and g.y[4] == 0.0

    @pytest.mark.parametrize("N", [4, 3, 0, -5])
    def test_bad_node_count(self, N):
        with pytest.raises(ParameterError):
            Grid(1.0, N)

    @pytest.mark.parametrize("L", [0.0, -1.0, math.inf])
    def test_bad_half_width(self, L):
        with pytest.raises(ParameterError):
            Grid(L, 9)

    def test_refined_and_doubled_are_nested(self):
        g = Grid(3.0, 13)
        assert g.refined().dy == pytest.approx(g.dy / 2)
        d = g.doubled()
        assert d.dy == pytest.approx(g.dy)
        np.testing.assert_allclose(d.y[(d.N - g.N) // 2:(d.N + g.N) // 2], g.y, atol=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(L=half_widths, N=odd_n)
    def test_exact_mirror_symmetry(self, L, N):
        g = Grid(L, N)
        assert np.array_equal(g.y, -g.y[::-1])
        assert np.all(np.diff(g.y) > 0)

    def test_nodes_read_only(self):
        with pytest.raises(ValueError):
            Grid(1.0, 5).y[0] = 3.0


class TestDdy:
    def test_constant(self):
        g = Grid(2.0, 21)
        assert np.array_equal(ddy(np.full(g.N, 3.7), g), np.zeros(g.N))

    @settings(max_examples=100, deadline=None)
    @given(L=half_widths, N=odd_n, slope=st.floats(-1e3, 1e3), shift=st.floats(-1e3, 1e3))
    def test_exact_on_linears(self, L, N, slope, shift):
        g = Grid(L, N)
        d = ddy(slope * g.y + shift, g)
        np.testing.assert_allclose(d, slope, rtol=1e-9, atol=1e-9 * (1 + abs(shift) / g.dy))

    def test_second_order_on_sine(self):
        errs = []
        for N in (65, 129, 257, 513):
            g = Grid(3.0, N)
            errs.append(np.max(np.abs(ddy(np.sin(g.y), g) - np.cos(g.y))))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        np.testing.assert_allclose(orders, 2.0, atol=0.1)

    def test_leading_axes(self):
        g = Grid(1.0, 11)
        f = np.vstack([g.y, 2 * g.y])
        np.testing.assert_allclose(ddy(f, g), [[1.0] * 11, [2.0] * 11], rtol=1e-13)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ddy(np.zeros(10), Grid(1.0, 11))


class TestViscousDiv:
    def test_constant(self):
        g = Grid(1.0, 11)
        assert np.array_equal(viscous_div(np.full(g.N, 2.0), np.ones(g.N), 3.0, g),
                              np.zeros(g.N))

    def test_exact_on_quadratics(self):
        g = Grid(1.0, 17)
        out = viscous_div(g.y ** 2, np.ones(g.N), 1.5, g)
        np.testing.assert_allclose(out[1:-1], 3.0, rtol=1e-12)
        assert out[0] == 0.0 and out[-1] == 0.0

    def test_variable_jacobian_against_symbolic(self):
        y = sp.symbols("y")
        c = 0.7
        Jx = 1 + sp.Rational(1, 10) * sp.sin(y)
        exact_fn = sp.lambdify(y, sp.diff(c * sp.diff(sp.cos(y), y) / Jx, y), "numpy")
        errs = []
        for N in (65, 129, 257, 513):
            g = Grid(3.0, N)
            num = viscous_div(np.cos(g.y), 1 + 0.1 * np.sin(g.y), c, g)
            errs.append(np.max(np.abs(num - exact_fn(g.y))[1:-1]))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        np.testing.assert_allclose(orders, 2.0, atol=0.1)

    def test_rejects_nonpositive_jacobian(self):
        g = Grid(1.0, 11)
        J = np.ones(g.N)
        J[3] = 0.0
        with pytest.raises(StateCorruptionError):
            face_flux(g.y, J, 1.0, g)

    def test_telescopes(self):
        # Interior divergences sum to the difference of the end fluxes.
        g = Grid(2.0, 41)
        rng = np.random.default_rng(3)
        phi = rng.normal(size=g.N)
        J = 1 + 0.5 * rng.random(g.N)
        flux = face_flux(phi, J, 1.0, g)
        div = viscous_div(phi, J, 1.0, g)
        assert math.fsum(div[1:-1] * g.dy) == pytest.approx(flux[-1] - flux[0], abs=1e-12)


class TestIntegrate:
    def test_constant(self):
        assert integrate(np.ones(11), Grid(1.0, 11)) == 2.0

    @settings(max_examples=100, deadline=None)
    @given(L=half_widths, N=odd_n)
    def test_odd_functions_vanish(self, L, N):
        g = Grid(L, N)
        assert abs(integrate(g.y, g)) <= 1e-15
        assert abs(integrate(g.y ** 3, g)) <= 1e-15 * max(1.0, L ** 4)

    def test_gaussian(self):
        g = Grid(8.0, 4097)
        mpmath.mp.dps = 30
        ref = float(mpmath.quad(lambda x: mpmath.exp(-x * x), [-8, 8]))
        assert integrate(np.exp(-g.y ** 2), g) == pytest.approx(ref, abs=1e-10)
        assert ref == pytest.approx(math.sqrt(math.pi), abs=1e-10)

    def test_leading_axes(self):
        g = Grid(1.0, 11)
        np.testing.assert_allclose(integrate(np.ones((2, 3, 11)), g), np.full((2, 3), 2.0))

    @settings(max_examples=50, deadline=None)
    @given(N=odd_n, seed=st.integers(0, 2**32 - 1))
    def test_order_independent(self, N, seed):
        g = Grid(1.0, N)
        f = np.random.default_rng(seed).normal(size=N) * 1e8
        assert integrate(f, g) == -integrate(-f, g)
        assert integrate(f, g) == integrate(f[::-1], g)


class TestWeightedL2:
    def test_zero(self):
        g = Grid(1.0, 11)
        assert weighted_l2(np.zeros(g.N), np.ones(g.N), g) == 0.0

    def test_unit(self):
        g = Grid(1.0, 11)
        assert weighted_l2(np.ones(g.N), np.ones(g.N), g) == pytest.approx(math.sqrt(2.0))

    def test_premultiplied_matches_weight(self):
        g = Grid(6.0, 301)
        rho0 = (1 + g.y ** 2) ** -1.0
        f = np.vstack([np.sin(g.y), np.cos(3 * g.y)])
        alpha = 1.4
        a = weighted_l2(rho0 ** (-alpha / 2) * f, np.ones(g.N), g)
        b = weighted_l2(f, rho0 ** -alpha, g)
        assert a == pytest.approx(b, rel=1e-12)

    def test_negative_weight(self):
        g = Grid(1.0, 11)
        w = np.ones(g.N)
        w[2] = -1e-3
        with pytest.raises(DomainError):
            weighted_l2(np.ones(g.N), w, g)

    @settings(max_examples=100, deadline=None)
    @given(N=odd_n, seed=st.integers(0, 2**32 - 1))
    def test_nonnegative(self, N, seed):
        rng = np.random.default_rng(seed)
        g = Grid(2.0, N)
        assert weighted_l2(rng.normal(size=(2, N)), rng.random(N), g) >= 0.0
