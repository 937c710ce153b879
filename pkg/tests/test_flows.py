import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from frontlab.cell_geometry import CellChart, metric_coeffs
from frontlab.flows import (cellular_flow, check_divergence, check_mean_zero, critical_nodes,
                            extract_tubes, face_fluxes, perturbed_shear_flow,
                            sample_velocity, sampled_stream_function_flow, shear_flow,
                            sine_shear_flow, tube_family_for_flow, velocity_field_flow,
                            zero_flow)
from frontlab.grid import build_grid

BUILT_IN = [
    ("zero", lambda: zero_flow(1.0)),
    ("sine_shear", lambda: sine_shear_flow(3.0, math.pi)),
    ("sine_shear_modes", lambda: sine_shear_flow(2.0, 2.0, modes=3)),
    ("cellular", lambda: cellular_flow(5.0, 1.0)),
    ("perturbed_shear", lambda: perturbed_shear_flow(4.0, 2.0, 0.5)),
]


def test_sine_shear_values():
    fl = sine_shear_flow(2.0, 1.0)
    y = np.linspace(0, 1, 11)
    u1, u2 = fl.velocity(np.zeros_like(y), y)
    assert np.allclose(u1, 2.0 * np.sin(2 * np.pi * y), atol=1e-14)
    assert np.all(u2 == 0.0)
    assert fl.max_speed == pytest.approx(2.0, rel=1e-6)


def test_shear_mean_removed_with_warning(caplog):
    H, U = 1.0, 2.0
    with caplog.at_level(logging.WARNING):
        fl = shear_flow(lambda y: U * (np.cos(2 * np.pi * y / H) + 0.3), H)
    assert "mean" in caplog.text
    y = np.linspace(0, H, 7)
    u1, _ = fl.velocity(0.0 * y, y)
    assert np.allclose(u1, U * np.cos(2 * np.pi * y / H), atol=1e-12)
    assert check_mean_zero(fl) <= 1e-12


def test_shear_rejects_nonfinite():
    with pytest.raises(ValueError):
        shear_flow(np.array([1.0, np.nan, -1.0]), 1.0)


def test_shear_is_x_independent():
    fl = sine_shear_flow(1.0, 1.0)
    a = fl.velocity(np.array([0.0, 3.7, -11.0]), np.full(3, 0.3))[0]
    assert np.all(a == a[0])


def test_cellular_point_values():
    U, H = 3.0, 0.7
    fl = cellular_flow(U, H)
    u1, u2 = fl.velocity(math.pi * H / 2, 0.0)
    assert u1 == pytest.approx(U) and u2 == pytest.approx(0.0, abs=1e-15)
    assert fl.psi(math.pi * H / 2, math.pi * H / 2) == pytest.approx(U * H)
    c = fl.velocity(0.0, 0.0)
    assert c[0] == 0.0 and c[1] == 0.0
    assert fl.H == pytest.approx(math.pi * H)


def test_cellular_analytic_divergence_zero(rng):
    fl = cellular_flow(2.0, 1.0)
    x, y = rng.random(50) * 6, rng.random(50) * 3
    e = 1e-5
    div = ((fl.velocity(x + e, y)[0] - fl.velocity(x - e, y)[0])
           + (fl.velocity(x, y + e)[1] - fl.velocity(x, y - e)[1])) / (2 * e)
    assert np.abs(div).max() < 1e-8


def test_sample_velocity_rejects_points_outside():
    with pytest.raises(ValueError):
        sample_velocity(sine_shear_flow(1.0, 1.0), 0.0, 1.5)


def test_sampled_psi_converges_second_order():
    U, H = 1.0, 1.0
    ref = cellular_flow(U, H)
    x = np.linspace(0.1, 6.0, 37)
    y = np.linspace(0.05, 3.0, 41)
    X, Y = np.meshgrid(x, y, indexing="ij")
    errs = []
    for n in (32, 64, 128):
        P = 2 * math.pi * H
        xs = np.arange(n) * P / n
        ys = np.linspace(0, math.pi * H, n // 2 + 1)
        nodes = ref.psi(*np.meshgrid(xs, ys, indexing="ij"))
        fl = sampled_stream_function_flow(nodes, math.pi * H, P, U)
        u = np.hypot(*(a - b for a, b in zip(fl.velocity(X, Y), ref.velocity(X, Y))))
        errs.append(u.max())
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.8), rates


@pytest.mark.parametrize("name,make", BUILT_IN)
def test_builtin_mean_zero(name, make):
    assert check_mean_zero(make()) <= 1e-12


def test_constant_flow_mean_is_H():
    fl = velocity_field_flow(lambda x, y: (np.ones_like(np.asarray(y, float)),
                                           np.zeros_like(np.asarray(y, float))), 2.5, 1.0)
    assert check_mean_zero(fl) == pytest.approx(2.5, rel=1e-13)


@pytest.mark.parametrize("name,make", BUILT_IN)
@pytest.mark.parametrize("bc", ["neumann", "periodic"])
def test_builtin_discrete_divergence(name, make, bc):
    fl = make()
    g = build_grid(fl.H, 24, -3.0, 9.0, 96, bc)
    assert check_divergence(fl, g, window_offset=1.234) <= 1e-12


def test_corrupted_velocity_divergence_is_one():
    fl = velocity_field_flow(lambda x, y: (np.asarray(x, float), 0.0 * np.asarray(y, float)),
                             1.0, 10.0)
    for n in (16, 64):
        g = build_grid(1.0, 8, 0.0, 1.0, n)
        assert check_divergence(fl, g) == pytest.approx(1.0, rel=1e-12)


def test_face_fluxes_exact_sum():
    fl = cellular_flow(7.0, 1.0)
    g = build_grid(fl.H, 16, 0.0, 10.0, 64)
    Fx, Fy = face_fluxes(fl, g)
    net = (Fx[1:] - Fx[:-1]) + (Fy[:, 1:] - Fy[:, :-1])
    assert np.all(net == 0.0)
    # flux through a face is the exact velocity integral over it
    x = g.x_lo + 5 * g.dx
    exact = [integrate.quad(lambda y: fl.velocity(x, y)[0], j * g.dy, (j + 1) * g.dy)[0]
             for j in range(g.ny)]
    assert np.allclose(Fx[5], exact, rtol=0, atol=1e-12)


# ------------------------------------------------------------------ tubes


@pytest.mark.parametrize("U,H", [(1.0, 1.0), (3.0, math.pi)])
def test_sine_shear_tubes(U, H):
    fam = tube_family_for_flow(sine_shear_flow(U, H), 512, nx_period=8, ny_nodes=257)
    assert len(fam) == 2
    assert sorted(t.sign for t in fam.tubes) == [-1, 1]
    lobe, _ = integrate.quad(lambda y: U * math.sin(2 * math.pi * y / H), 0, H / 2)
    assert lobe == pytest.approx(U * H / math.pi, rel=1e-12)
    for t in fam.tubes:
        assert t.flux == pytest.approx(lobe, rel=5e-3)
        assert t.geometry_verified
    assert fam.total_flux == pytest.approx(2 * U * H / math.pi, rel=5e-3)


def test_tube_flux_equals_vertical_cut_integral():
    U, H = 2.0, 1.0
    fl = perturbed_shear_flow(U, H, 0.5)
    fam = tube_family_for_flow(fl, 256)
    assert len(fam) == 2
    for t in fam.tubes:
        # psi levels bounding the tube: the x-integral of u1 between them is their difference
        assert t.flux == pytest.approx(t.psi_top - t.psi_bottom, rel=1e-12)
        assert t.flux > 0


@pytest.mark.parametrize("make", [lambda: cellular_flow(4.0, 1.0), lambda: zero_flow(1.0)])
def test_no_tubes_for_closed_or_zero_flow(make):
    assert len(tube_family_for_flow(make(), 512)) == 0


def test_tube_refinement_is_monotone():
    fl = sine_shear_flow(1.0, 1.0)
    totals = [tube_family_for_flow(fl, n, nx_period=8, ny_nodes=257).total_flux
              for n in (64, 128, 256, 512)]
    assert all(b >= a for a, b in zip(totals, totals[1:]))


def test_tube_bands_avoid_critical_points():
    fl = perturbed_shear_flow(1.0, 1.0, 0.5)
    xs = np.arange(64) / 64
    ys = np.linspace(0, 1, 129)
    P = fl.psi(*np.meshgrid(xs, ys, indexing="ij"))
    crit_vals = P[critical_nodes(P)]
    for t in extract_tubes(P, 128, 1.0, x_period=1.0, H=1.0).tubes:
        inside = (crit_vals > t.psi_bottom) & (crit_vals < t.psi_top)
        assert not inside.any()


def test_E1_times_speed_is_U_on_cell_levels(rng):
    U, H = 2.5, 1.0
    fl = cellular_flow(U, H)
    chart = CellChart(H)
    x = math.pi * H * (0.15 + 0.7 * rng.random(200))
    y = math.pi * H * (0.15 + 0.7 * rng.random(200))
    from frontlab.cell_geometry import rho
    keep = rho(x, y, H) <= H / 2
    x, y = x[keep], y[keep]
    E1 = metric_coeffs(chart, x, y).E1
    speed = np.hypot(*fl.velocity(x, y))
    assert np.allclose(E1 * speed, U, rtol=0, atol=1e-8 * U)


@settings(max_examples=20, deadline=None)
@given(U=st.floats(0.1, 50), H=st.floats(0.2, 5), off=st.floats(-50, 50))
def test_cellular_divergence_property(U, H, off):
    fl = cellular_flow(U, H)
    g = build_grid(fl.H, 8, 0.0, 4 * H, 16, "neumann")
    assert check_divergence(fl, g, off) <= 1e-12
