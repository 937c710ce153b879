import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from frontlab.grid import (BC, TemperatureField, build_grid, integrate_over_window,
                           shift_window, window_mass)
from frontlab.solver import make_front_initial_data
from frontlab import _kernels as K


def test_spacing():
    g = build_grid(math.pi, 64, 0.0, 10.0, 100)
    assert g.dy == math.pi / 64
    assert g.dx == pytest.approx(0.1)


def test_row_index_wraps_and_mirrors():
    gp = build_grid(1.0, 8, 0.0, 1.0, 8, "periodic")
    assert gp.row_index(-1) == 7
    assert gp.row_index(8) == 0
    gn = build_grid(1.0, 8, 0.0, 1.0, 8, BC.NEUMANN)
    assert gn.row_index(-1) == 0
    assert gn.row_index(8) == 7


def test_ghost_rows_of_padded_array(rng):
    T = rng.random((10, 8))
    P = np.empty((12, 10))
    K.pad(T, P, False)
    assert np.array_equal(P[1:-1, 0], T[:, 0])          # mirror below row 0
    assert np.array_equal(P[1:-1, -1], T[:, -1])
    assert np.all(P[0, 1:-1] == 1.0) and np.all(P[-1, 1:-1] == 0.0)
    K.pad(T, P, True)
    assert np.array_equal(P[1:-1, 0], T[:, -1])
    assert np.array_equal(P[1:-1, -1], T[:, 0])


def test_neumann_derivative_vanishes_at_walls(rng):
    T = rng.random((10, 8))
    P = np.empty((12, 10))
    K.pad(T, P, False)
    assert np.all(P[1:-1, 1] - P[1:-1, 0] == 0.0)
    assert np.all(P[1:-1, -1] - P[1:-1, -2] == 0.0)


def test_invalid_grid_reports_every_problem():
    with pytest.raises(ValueError) as exc:
        build_grid(-1.0, 2, 1.0, 0.0, 4, "dirichlet")
    msg = str(exc.value)
    for word in ("H must", "x_hi", "nx", "ny", "bc_y"):
        assert word in msg


def test_integrate_constants():
    g = build_grid(2.0, 8, -3.0, 7.0, 50)
    fld = TemperatureField(g, np.zeros((50, 8)))
    assert integrate_over_window(fld, 1.0) == pytest.approx(10.0, rel=1e-14)
    assert integrate_over_window(fld, 0.0) == 0.0


def test_sigmoid_mass_matches_quadrature():
    lam, x0 = 1.3, 12.0
    g = build_grid(1.0, 8, 0.0, 40.0, 4000)
    fld = make_front_initial_data(g, lam, x0)
    oracle, _ = integrate.quad(lambda x: 1.0 / (1.0 + math.exp(lam * (x - x0))), 0.0, 40.0,
                               limit=200, epsabs=1e-13)
    assert window_mass(fld) == pytest.approx(oracle, abs=1e-5)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 2**31))
def test_integration_linear_and_monotone(a, b, seed):
    rng = np.random.default_rng(seed)
    g = build_grid(1.0, 8, 0.0, 2.0, 16)
    fld = TemperatureField(g, np.zeros((16, 8)))
    p, q = rng.random((16, 8)), rng.random((16, 8))
    lhs = integrate_over_window(fld, a * p + b * q)
    rhs = a * integrate_over_window(fld, p) + b * integrate_over_window(fld, q)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert integrate_over_window(fld, p + q) >= integrate_over_window(fld, p)


def test_shift_identity_cases():
    g = build_grid(1.0, 8, 0.0, 20.0, 100)
    zero = TemperatureField(g, np.zeros((100, 8)))
    out, s = shift_window(zero)
    assert s == 0.0 and out is zero
    fld = make_front_initial_data(g, 2.0, 4.0)
    out, s = shift_window(fld)
    assert s == 0.0


def test_shift_bookkeeping_conserves_mass():
    g = build_grid(1.0, 8, 0.0, 20.0, 100)
    fld = make_front_initial_data(g, 1.0, 12.0)
    fld.values[-5:] = 1e-5                          # heat the right tail
    out, s = shift_window(fld)
    assert s > 0 and s == pytest.approx(round(s / g.dx) * g.dx)
    n = int(round(s / g.dx))
    dropped = fld.values[:n].sum() * g.dx * g.dy / g.H
    assert window_mass(fld) == pytest.approx(window_mass(out) + dropped, abs=1e-12)
    assert out.window_offset == pytest.approx(s)
    assert np.allclose(out.x_abs[: 100 - n], fld.x_abs[n:], atol=1e-12)
