"""Measurable quantities of a running front: burning rates, gradient energy,
front position and speed, and weighted averages near cell interfaces."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, ndimage, stats

from .grid import TemperatureField, integrate_over_window, window_mass

_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    V_reaction: float
    V_mass: float
    avg_V: float
    grad_energy: float
    front_x: float
    min_T: float
    max_T: float
    min_dT: float = float("nan")
    shifted: bool = False
    window_offset: float = 0.0
    int_V: float = 0.0          # running time integral of V_reaction

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def as_dict(self):
        return asdict(self)


def burning_rate_reaction(fld: TemperatureField, config) -> float:
    """(v0^2 / kappa) int f(T) dx dy / H."""
    return config.rate * integrate_over_window(fld, config.reaction.f)


def burning_rate_mass(prev: TemperatureField, nxt: TemperatureField, dt: float,
                      inflow: float = 0.0) -> float:
    """Mass change per unit time, net of `inflow` through the window closures
    (in the same units as window_mass)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if prev.grid != nxt.grid or prev.window_offset != nxt.window_offset:
        raise ValueError("fields live on different windows")
    return (window_mass(nxt) - window_mass(prev) - inflow) / dt


def _padded(fld: TemperatureField) -> np.ndarray:
    g = fld.grid
    T = fld.values
    P = np.empty((g.nx + 2, g.ny + 2))
    P[1:-1, 1:-1] = T
    P[0, 1:-1], P[-1, 1:-1] = 1.0, 0.0
    if g.periodic:
        P[:, 0], P[:, -1] = P[:, -2], P[:, 1]
    else:
        P[:, 0], P[:, -1] = P[:, 1], P[:, -2]
    return P


def gradient_energy(fld: TemperatureField, kappa: float) -> float:
    """kappa int |grad T|^2 dx dy / H with central differences."""
    g = fld.grid
    P = _padded(fld)
    Tx = (P[2:, 1:-1] - P[:-2, 1:-1]) / (2 * g.dx)
    Ty = (P[1:-1, 2:] - P[1:-1, :-2]) / (2 * g.dy)
    return kappa * integrate_over_window(fld, Tx * Tx + Ty * Ty)


def time_average_V(records, t: float | None = None) -> float:
    """Trapezoidal time average of V_reaction from the first record to t."""
    if isinstance(records, tuple) and len(records) == 2:
        ts, vs = (np.asarray(a, float) for a in records)
    else:
        ts = np.array([r.t for r in records], float)
        vs = np.array([r.V_reaction for r in records], float)
    if ts.size == 0:
        raise ValueError("empty time series")
    if t is not None:
        keep = ts <= t + 1e-12
        ts, vs = ts[keep], vs[keep]
    if ts.size == 1:
        return float(vs[0])
    span = ts[-1] - ts[0]
    if not span > 0:
        raise ValueError("time average needs t > 0")
    return float(integrate.trapezoid(vs, ts) / span)


def front_position(fld: TemperatureField, level: float = 0.5) -> float:
    """Largest absolute x where the y-averaged profile crosses `level`."""
    p = fld.values.mean(axis=1)
    x = fld.x_abs
    above = p >= level
    idx = np.nonzero(above[:-1] & ~above[1:])[0]
    if idx.size == 0:
        raise ValueError(f"profile does not cross level {level}")
    i = idx[-1]
    return float(x[i] + (p[i] - level) / (p[i] - p[i + 1]) * (x[i + 1] - x[i]))


def front_speed(records, tail_fraction: float = 0.5, min_samples: int = 10):
    """(slope, stderr) of front_x against t over the last tail_fraction."""
    if isinstance(records, tuple) and len(records) == 2:
        ts, xs = (np.asarray(a, float) for a in records)
    else:
        ts = np.array([r.t for r in records], float)
        xs = np.array([r.front_x for r in records], float)
    ok = np.isfinite(xs)
    ts, xs = ts[ok], xs[ok]
    n = int(math.ceil(tail_fraction * ts.size))
    if n < min_samples:
        raise ValueError(f"need >= {min_samples} tail samples, have {n}")
    ts, xs = ts[-n:], xs[-n:]
    if np.all(xs == xs[0]):
        return 0.0, 0.0
    fit = stats.linregress(ts, xs)
    return float(fit.slope), float(fit.stderr)


def kernel_average_G(p: Callable, c: float, h: float) -> float:
    """int G(h, y - c) p(y) dy with the tent G(h, s) = max(0, 1 - |s|/h)."""
    if not h > 0:
        raise ValueError("h must be positive")
    total = 0.0
    for a in (c - h, c):                 # the tent is linear on each half
        y = a + 0.5 * h * (_GL_X + 1.0)
        w = 0.5 * h * _GL_W
        total += float(np.sum(w * np.maximum(0.0, 1.0 - np.abs(y - c) / h)
                              * np.asarray(p(y), float)))
    return total


def sample_field(fld: TemperatureField, x, y):
    """Bilinear interpolation of T at absolute points; T = 1 left of the
    window and 0 right of it, as at the closures."""
    g = fld.grid
    x, y = np.asarray(x, float), np.asarray(y, float)
    ci = (x - g.x_lo - fld.window_offset) / g.dx - 0.5
    cj = y / g.dy - 0.5
    mode = "grid-wrap" if g.periodic else "nearest"
    P = fld.values
    if g.periodic:
        vals = ndimage.map_coordinates(P, [np.clip(ci, 0, g.nx - 1), cj], order=1,
                                       mode="grid-wrap")
    else:
        vals = ndimage.map_coordinates(P, [np.clip(ci, 0, g.nx - 1), np.clip(cj, 0, g.ny - 1)],
                                       order=1, mode=mode)
    vals = np.where(ci < -0.5, 1.0, vals)
    return np.where(ci > g.nx - 0.5, 0.0, vals)


def cell_interface_averages(fld: TemperatureField, flow, n: int, h: float,
                            A: float | None = None, n_rho: int = 8, n_xi: int = 32):
    """Tent-weighted averages of T over the boxes rho in [h, 3h] next to the
    left (xi in [-A, A]) and right (xi in [L - A, L + A]) interfaces of cell n.

    Weight k(rho) = U G(h, rho - 2h), normalised by 2 A F with F = U h.
    """
    from .cell_geometry import CellChart

    if flow.kind != "cellular":
        raise ValueError("cell_interface_averages needs the cellular flow")
    H, U = flow.cell_scale, flow.U
    if not 0 < h <= H / 6.0:
        raise ValueError(f"h must lie in (0, H/6] = (0, {H / 6:.4g}], got {h}")
    chart = CellChart.for_cell(H, n)
    L = chart.L
    A = 0.5 * H if A is None else A
    if not 0 < A <= L:
        raise ValueError(f"A must lie in (0, L] = (0, {L:.4g}], got {A}")
    gx, gw = np.polynomial.legendre.leggauss(n_rho)
    rr = np.concatenate([1.5 * h + 0.5 * h * gx, 2.5 * h + 0.5 * h * gx])
    wr = np.concatenate([0.5 * h * gw, 0.5 * h * gw])
    k = U * np.maximum(0.0, 1.0 - np.abs(rr - 2 * h) / h)
    F = U * h
    sx, sw = np.polynomial.legendre.leggauss(n_xi)
    out = []
    for centre in (0.0, L):
        xi = centre + A * sx
        R, X = np.meshgrid(rr, xi, indexing="ij")
        x, y, _ = chart.inverse(R, np.mod(X, 2 * L))
        T = sample_field(fld, x, y)
        W = (wr * k)[:, None] * (A * sw)[None, :]
        out.append(float(np.sum(W * T) / (2 * A * F)))
    return out[0], out[1]


def make_record(fld: TemperatureField, config, prev: TemperatureField | None = None,
                dt: float = 0.0, inflow: float = 0.0,
                records: Sequence[DiagnosticsRecord] = (), shifted: bool = False,
                ahead: TemperatureField | None = None) -> DiagnosticsRecord:
    """Diagnostics of `fld`. With `prev` (one step of size dt earlier) the
    mass rate is a backward difference; with `ahead` (one step of size dt
    later) it is the centred difference, and `inflow` must cover both steps."""
    V = burning_rate_reaction(fld, config)
    try:
        xf = front_position(fld)
    except ValueError:
        xf = float("nan")
    if prev is not None:
        if ahead is not None:
            Vm = burning_rate_mass(prev, ahead, 2.0 * dt, inflow)
        else:
            Vm = burning_rate_mass(prev, fld, dt, inflow)
        dmin = float((fld.values - prev.values).min())
    else:
        Vm, dmin = float("nan"), float("nan")
    if records:
        last = records[-1]
        integral = last.int_V + 0.5 * (last.V_reaction + V) * (fld.t - last.t)
        span = fld.t - records[0].t
        avg = integral / span if span > 0 else V
    else:
        integral, avg = 0.0, V
    return DiagnosticsRecord(
        t=float(fld.t), V_reaction=V, V_mass=Vm, avg_V=avg,
        grad_energy=gradient_energy(fld, config.kappa), front_x=xf,
        min_T=float(fld.values.min()), max_T=float(fld.values.max()), min_dT=dmin,
        shifted=shifted, window_offset=float(fld.window_offset), int_V=integral)
