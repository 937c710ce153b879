import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from frontlab.diagnostics import (burning_rate_mass, burning_rate_reaction,
                                  cell_interface_averages, front_position, front_speed,
                                  gradient_energy, kernel_average_G, time_average_V)
from frontlab.flows import cellular_flow, sine_shear_flow, zero_flow
from frontlab.grid import TemperatureField, build_grid
from frontlab.reactions import make_kpp_logistic
from frontlab.solver import SolverConfig, make_front_initial_data


def _cfg(H=1.0, kappa=1.0):
    return SolverConfig(kappa, 1.0, make_kpp_logistic(), zero_flow(H))


def _sigmoid(lam, x0, x):
    return 1.0 / (1.0 + math.exp(lam * (x - x0)))


def test_reaction_rate_of_constants():
    g = build_grid(1.0, 8, 0.0, 10.0, 40)
    for v in (0.0, 1.0):
        assert burning_rate_reaction(TemperatureField(g, np.full((40, 8), v)), _cfg()) == 0.0


def test_reaction_rate_of_sigmoid_matches_quadrature():
    g = build_grid(1.0, 8, 0.0, 40.0, 8000)
    fld = make_front_initial_data(g, 1.0, 20.0)
    oracle, _ = integrate.quad(lambda x: _sigmoid(1, 20, x) * (1 - _sigmoid(1, 20, x)),
                               0, 40, epsabs=1e-13, limit=200)
    assert burning_rate_reaction(fld, _cfg()) == pytest.approx(oracle, rel=1e-6)


def test_mass_rate_of_identical_fields_and_translation():
    g = build_grid(1.0, 8, 0.0, 40.0, 4000)
    a = make_front_initial_data(g, 1.0, 15.0)
    assert burning_rate_mass(a, a.copy(), 0.1) == 0.0
    c, dt = 2.0, 0.05
    b = make_front_initial_data(g, 1.0, 15.0 + c * dt)
    assert burning_rate_mass(a, b, dt) == pytest.approx(c, abs=g.dx ** 2)
    with pytest.raises(ValueError):
        burning_rate_mass(a, b, 0.0)


def test_gradient_energy_of_sigmoid():
    lam = 1.5
    g = build_grid(1.0, 8, 0.0, 40.0, 8000)
    fld = make_front_initial_data(g, lam, 20.0)
    # |T'|^2 = (lam T (1 - T))^2 integrates to lam / 6
    oracle, _ = integrate.quad(lambda x: (lam * _sigmoid(lam, 20, x) * (1 - _sigmoid(lam, 20, x))) ** 2,
                               0, 40, epsabs=1e-13, limit=200)
    assert oracle == pytest.approx(lam / 6, rel=1e-9)
    assert gradient_energy(fld, 1.0) == pytest.approx(oracle, rel=1e-5)
    assert gradient_energy(fld, 2.0) == pytest.approx(2 * gradient_energy(fld, 1.0), rel=1e-15)



def test_gradient_energy_of_constant_comes_from_closures_only():
    g = build_grid(1.0, 8, 0.0, 10.0, 100)
    fld = TemperatureField(g, np.full((100, 8), 0.3))
    # interior differences vanish; the first and last columns see the pinned ghosts
    edge = ((1 - 0.3) / (2 * g.dx)) ** 2 + (0.3 / (2 * g.dx)) ** 2
    assert gradient_energy(fld, 1.0) == pytest.approx(edge * g.dx, rel=1e-13)


def test_time_average():
    t = np.linspace(0, 5, 11)
    assert time_average_V((t, np.full(11, 3.0))) == pytest.approx(3.0)
    assert time_average_V((t, 2 * 3.0 * t / 5)) == pytest.approx(3.0)
    assert time_average_V((t[:1], np.array([7.0]))) == 7.0


def test_front_position():
    g = build_grid(1.0, 8, 0.0, 40.0, 400)
    fld = make_front_initial_data(g, 1.0, g.x_centers[123] + 0.03)
    assert front_position(fld) == pytest.approx(g.x_centers[123] + 0.03, abs=1e-3)
    moved = fld.copy()
    moved.window_offset += 2.5
    assert front_position(moved) == front_position(fld) + 2.5
    with pytest.raises(ValueError):
        front_position(TemperatureField(g, np.zeros((400, 8))))


def test_front_speed(rng):
    t = np.linspace(0, 10, 41)
    assert front_speed((t, 3 * t)) == (pytest.approx(3.0), pytest.approx(0.0, abs=1e-12))
    assert front_speed((t, np.full(41, 2.0))) == (0.0, 0.0)
    x = 2 * t + rng.normal(0, 0.01, t.size)
    c, err = front_speed((t, x))
    assert abs(c - 2) <= 3 * err
    with pytest.raises(ValueError):
        front_speed((t[:5], t[:5]))


def test_kernel_average():
    h, c = 0.3, 1.1
    assert kernel_average_G(lambda y: np.ones_like(y), c, h) == pytest.approx(h, rel=1e-14)
    assert kernel_average_G(lambda y: y - c, c, h) == pytest.approx(0.0, abs=1e-15)
    tent = lambda y: np.maximum(0, 1 - np.abs(y - c) / h)
    oracle, _ = integrate.quad(lambda y: tent(y) ** 2, c - h, c + h, points=[c])
    assert oracle == pytest.approx(2 * h / 3, rel=1e-12)
    assert kernel_average_G(tent, c, h) == pytest.approx(oracle, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0, 5), b=st.floats(0, 5), k=st.floats(0.1, 5), h=st.floats(0.01, 2))
def test_kernel_average_linear_positive(a, b, k, h):
    p = lambda y: 1 + np.sin(k * y) ** 2
    q = lambda y: np.cos(y) ** 2
    lhs = kernel_average_G(lambda y: a * p(y) + b * q(y), 0.4, h)
    rhs = a * kernel_average_G(p, 0.4, h) + b * kernel_average_G(q, 0.4, h)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)
    assert 0 <= kernel_average_G(p, 0.4, h) <= h * 2.0 + 1e-14


def _cell_grid(H=1.0, U=4.0):
    fl = cellular_flow(U, H)
    g = build_grid(fl.H, 64, 0.0, 4 * math.pi * H, 256)
    return fl, g


def test_interface_averages_constants():
    fl, g = _cell_grid()
    for theta in (0.0, 0.37):
        fld = TemperatureField(g, np.full((g.nx, g.ny), theta))
        left, right = cell_interface_averages(fld, fl, 1, 0.1)
        assert left == pytest.approx(theta, abs=1e-12)
        assert right == pytest.approx(theta, abs=1e-12)


def test_interface_averages_step():
    fl, g = _cell_grid()
    # burnt up to the middle of cell 1 (x < 1.5 pi H): the left interface
    # of cell 1 is burnt, the right one is not
    T = (g.x_centers < 1.5 * math.pi)[:, None] * np.ones((1, g.ny))
    left, right = cell_interface_averages(TemperatureField(g, T), fl, 1, 0.1)
    assert left > 0.9 and right < 0.1
    assert left - right > 0


def test_interface_averages_validation():
    fl, g = _cell_grid()
    fld = TemperatureField(g, np.zeros((g.nx, g.ny)))
    with pytest.raises(ValueError, match="H/6"):
        cell_interface_averages(fld, fl, 1, 0.5)
    with pytest.raises(ValueError, match="cellular"):
        cell_interface_averages(fld, sine_shear_flow(1.0, 1.0), 1, 0.1)
