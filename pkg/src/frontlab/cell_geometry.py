"""Curvilinear streamline coordinates (rho, xi) inside one convection cell.

In cell-local coordinates (x~, y~) in [0, pi H]^2 the stream coordinate is
rho = H sin(x~/H) sin(y~/H). The second coordinate xi is constant along the
gradient lines of rho and satisfies |grad xi| = Q |grad rho|, with Q fixed by
    d log Q / d rho = -Lap rho / |grad rho|^2   along gradient lines,
    Q = 1 on the level rho = H/2.
Lap rho = -2 rho / H^2 for this rho. On the anchor level xi is the integral of
|grad rho| ds, measured from the ray pointing in -x from the cell centre and
increasing through the bottom half of the cell: xi = L on the +x ray and the
level closes at xi = 2L.

The chart is valid for 0 < rho <= H/2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.stats import qmc

log = logging.getLogger(__name__)

RHO_MIN_FRACTION = 1e-3
N_FOURIER = 256


def rho(x, y, H: float):
    """rho in cell-local coordinates."""
    return H * np.sin(np.asarray(x) / H) * np.sin(np.asarray(y) / H)


def grad_rho(x, y, H: float):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return (np.cos(x / H) * np.sin(y / H), np.sin(x / H) * np.cos(y / H))


def laplacian_rho(x, y, H: float):
    return -2.0 * rho(x, y, H) / H ** 2


def _grad_sq(x, y, H):
    gx, gy = grad_rho(x, y, H)
    return gx * gx + gy * gy


@dataclass(frozen=True)
class MetricSample:
    rho: np.ndarray
    xi: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    omega: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True)
class StreamlineTrace:
    points: np.ndarray          # (n, 2) cell-local, closed implicitly
    arclength: np.ndarray       # (n + 1,) cumulative, last entry = perimeter
    perimeter: float
    half_perimeter: float       # arc length from the -x ray to the +x ray
    closure_gap: float
    xi_period: float            # 2L (xi length of one loop on the anchor level)


@dataclass(frozen=True)
class CellChart:
    H: float
    cell_origin: tuple = (0.0, 0.0)
    sign: int = 1               # sign of psi / (U rho) in this cell
    _fourier: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def for_cell(cls, H: float, n: int) -> "CellChart":
        """Chart of the n-th cell [n pi H, (n+1) pi H] of the cellular flow."""
        return cls(H, (n * math.pi * H, 0.0), 1 if n % 2 == 0 else -1)

    @property
    def center(self):
        return 0.5 * math.pi * self.H, 0.5 * math.pi * self.H

    def to_local(self, x, y):
        return np.asarray(x, float) - self.cell_origin[0], np.asarray(y, float) - self.cell_origin[1]

    def to_absolute(self, xl, yl):
        return np.asarray(xl) + self.cell_origin[0], np.asarray(yl) + self.cell_origin[1]

    # ---------------------------------------------------------------- levels
    def level_radius(self, level, phi):
        """Distance from the centre to the rho = level curve along angle phi."""
        H = self.H
        cx, cy = self.center
        phi = np.asarray(phi, float)
        level = np.broadcast_to(np.asarray(level, float), phi.shape)
        c, s = np.cos(phi), np.sin(phi)
        hi = 0.5 * math.pi * H / np.maximum(np.abs(c), np.abs(s))
        lo = np.zeros_like(hi)
        for _ in range(60):                    # rho decreases along each ray
            mid = 0.5 * (lo + hi)
            above = rho(cx + mid * c, cy + mid * s, H) > level
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return 0.5 * (lo + hi)

    def _level_point_and_speed(self, level, phi):
        """Point on the level at angle phi and |grad rho| |dP/dphi|."""
        H = self.H
        cx, cy = self.center
        r = self.level_radius(level, phi)
        c, s = np.cos(phi), np.sin(phi)
        x, y = cx + r * c, cy + r * s
        gx, gy = grad_rho(x, y, H)
        Fr = gx * c + gy * s
        Fphi = r * (-gx * s + gy * c)
        dr = -Fphi / Fr
        dPx = dr * c - r * s
        dPy = dr * s + r * c
        return x, y, np.hypot(gx, gy) * np.hypot(dPx, dPy), np.hypot(dPx, dPy)

    def _anchor_series(self):
        if "coef" not in self._fourier:
            phi = 2 * math.pi * np.arange(N_FOURIER) / N_FOURIER
            _, _, g, _ = self._level_point_and_speed(0.5 * self.H, phi)
            coef = np.fft.rfft(g) / N_FOURIER
            coef[-1] = 0.0                    # drop the Nyquist mode
            self._fourier["coef"] = coef
        return self._fourier["coef"]

    @property
    def L(self) -> float:
        """Half the xi length of a loop; xi = L on the +x ray."""
        return math.pi * float(self._anchor_series()[0].real)

    def _xi_of_phi(self, phi):
        coef = self._anchor_series()
        phi = np.asarray(phi, float)
        m = np.arange(1, coef.size)
        def S(p):
            e = np.exp(1j * np.multiply.outer(p, m))
            return 2.0 * np.real(e @ (coef[1:] / (1j * m)))
        return coef[0].real * (phi - math.pi) + S(phi) - S(np.array(math.pi))

    def _dxi_dphi(self, phi):
        coef = self._anchor_series()
        m = np.arange(1, coef.size)
        e = np.exp(1j * np.multiply.outer(np.asarray(phi, float), m))
        return coef[0].real + 2.0 * np.real(e @ coef[1:])

    def _phi_of_xi(self, xi):
        xi = np.mod(np.asarray(xi, float), 2.0 * self.L)
        a0 = self._anchor_series()[0].real
        phi = math.pi + xi / a0
        for _ in range(50):
            err = self._xi_of_phi(phi) - xi
            phi = phi - err / self._dxi_dphi(phi)
            if np.max(np.abs(err)) < 1e-13 * self.H:
                break
        return phi

    # ---------------------------------------------------------------- flows
    def _flow_to(self, x, y, rho_from, rho_to):
        """Follow grad-rho lines from level rho_from to rho_to (vectorized).

        Returns end points and log Q(end) - log Q(start)."""
        H = self.H
        x, y = np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float))
        r0 = np.broadcast_to(np.asarray(rho_from, float), x.shape).copy()
        r1 = np.broadcast_to(np.asarray(rho_to, float), x.shape).copy()
        n = x.size
        span = r1 - r0

        def rhs(s, z):
            px, py = z[:n], z[n:2 * n]
            gx, gy = grad_rho(px, py, H)
            g2 = gx * gx + gy * gy
            rr = r0 + s * span
            return np.concatenate([span * gx / g2, span * gy / g2,
                                   span * 2.0 * rr / (H * H * g2)])

        z0 = np.concatenate([x, y, np.zeros(n)])
        sol = solve_ivp(rhs, (0.0, 1.0), z0, method="RK45", rtol=1e-10,
                        atol=1e-12 * H)
        if not sol.success:
            raise RuntimeError(f"gradient-line integration failed: {sol.message}")
        z = sol.y[:, -1]
        return z[:n], z[n:2 * n], z[2 * n:]

    def _check_region(self, r):
        r = np.asarray(r)
        if np.any(r > 0.5 * self.H * (1 + 1e-12)):
            raise ValueError("chart is only defined for 0 < rho <= H/2")
        if np.any(r <= 0.0):
            raise ValueError("point on the separatrix (rho <= 0) is a critical region")

    def coordinates(self, x, y):
        """(rho, xi, Q) of absolute points with 0 < rho <= H/2."""
        xl, yl = self.to_local(x, y)
        shape = np.shape(xl)
        xl, yl = np.atleast_1d(xl).ravel(), np.atleast_1d(yl).ravel()
        r = rho(xl, yl, self.H)
        self._check_region(r)
        ex, ey, dlogQ = self._flow_to(xl, yl, r, 0.5 * self.H)
        cx, cy = self.center
        phi = np.mod(np.arctan2(ey - cy, ex - cx) - math.pi, 2 * math.pi) + math.pi
        xi = self._xi_of_phi(phi)
        Q = np.exp(-dlogQ)
        return r.reshape(shape), xi.reshape(shape), Q.reshape(shape)

    def inverse(self, r, xi):
        """Absolute (x, y) and Q of the chart point (rho, xi)."""
        r, xi = np.broadcast_arrays(np.asarray(r, float), np.asarray(xi, float))
        shape = r.shape
        r, xi = r.ravel(), xi.ravel()
        self._check_region(r)
        phi = self._phi_of_xi(xi)
        ax, ay, _, _ = self._level_point_and_speed(0.5 * self.H, phi)
        xl, yl, dlogQ = self._flow_to(ax, ay, 0.5 * self.H, r)
        x, y = self.to_absolute(xl, yl)
        return x.reshape(shape), y.reshape(shape), np.exp(dlogQ).reshape(shape)


def xi_coordinate(chart: CellChart, x, y):
    """xi at absolute points."""
    return chart.coordinates(x, y)[1]


def Q_value(chart: CellChart, x, y):
    return chart.coordinates(x, y)[2]


def metric_coeffs(chart: CellChart, x, y) -> MetricSample:
    r, xi, Q = chart.coordinates(x, y)
    xl, yl = chart.to_local(x, y)
    g = np.sqrt(_grad_sq(xl, yl, chart.H))
    if np.any(g == 0.0):
        raise ValueError("critical point of rho")
    return MetricSample(r, xi, 1.0 / g, 1.0 / (Q * g), 1.0 / Q, Q)


def trace_streamline(chart: CellChart, level: float, n_points: int = 1024) -> StreamlineTrace:
    """Closed polyline of the rho = level curve, ordered like xi."""
    if not 0.0 < level < chart.H:
        raise ValueError(f"level must lie in (0, H) = (0, {chart.H}), got {level}")
    phi = math.pi + 2 * math.pi * np.arange(n_points + 1) / n_points
    x, y, _, speed = chart._level_point_and_speed(level, phi)
    pts = np.stack([x, y], axis=1)
    seg = np.hypot(np.diff(x), np.diff(y))
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    # spectral perimeter (the polyline converges only at second order)
    perim = float(speed[:-1].mean() * 2 * math.pi)
    half = float(speed[: n_points // 2].mean() * math.pi) if n_points % 2 == 0 else perim / 2
    gap = float(np.hypot(x[-1] - x[0], y[-1] - y[0]))
    return StreamlineTrace(pts[:-1], arc, perim, half, gap, 2.0 * chart.L)


def _region_samples(H: float, n: int, seed: int = 0, rho_min_fraction: float = 0.0):
    """Quasi-random cell-local points with rho_min < rho <= H/2."""
    sob = qmc.Sobol(d=2, scramble=True, seed=seed)
    out = []
    total = 0
    while total < n:
        u = sob.random_base2(max(10, math.ceil(math.log2(2 * (n - total) + 1))))
        x, y = math.pi * H * u[:, 0], math.pi * H * u[:, 1]
        r = rho(x, y, H)
        keep = (r <= 0.5 * H) & (r > rho_min_fraction * H)
        out.append(np.stack([x[keep], y[keep]], axis=1))
        total += int(keep.sum())
    return np.concatenate(out)[:n]


def gradest_check(H: float, n_samples: int = 10_000, seed: int = 0) -> float:
    """min of |grad rho|^2 - rho/H over the region 0 < rho <= H/2."""
    p = _region_samples(H, n_samples, seed)
    return float(np.min(_grad_sq(p[:, 0], p[:, 1], H) - rho(p[:, 0], p[:, 1], H) / H))


def sample_Q(chart: CellChart, n_samples: int = 10_000, seed: int = 0):
    """Q at quasi-random points of the region rho_min < rho <= H/2."""
    p = _region_samples(chart.H, n_samples, seed, RHO_MIN_FRACTION)
    x, y = chart.to_absolute(p[:, 0], p[:, 1])
    return chart.coordinates(x, y)[2]


def verify_procoord(chart: CellChart, n_samples: int = 4096, seed: int = 0,
                    rel_step: float = 1e-4) -> dict:
    """Empirical constants of the chart bounds over rho in [1e-3 H, H/2].

    Derivatives of omega = 1/Q are symmetric differences through the
    inverse chart map."""
    H, L = chart.H, chart.L
    m = math.ceil(math.log2(max(n_samples, 2)))
    u = qmc.Sobol(d=2, scramble=True, seed=seed).random_base2(m)[:n_samples]
    dr = rel_step * H
    r = RHO_MIN_FRACTION * H + dr + u[:, 0] * (0.5 * H - 2 * dr - RHO_MIN_FRACTION * H)
    xi = u[:, 1] * 2 * L
    dxi = rel_step * H
    R = np.concatenate([r, r + dr, r - dr, r, r])
    X = np.concatenate([xi, xi, xi, xi + dxi, xi - dxi])
    x, y, Q = chart.inverse(R, X)
    Q = Q.reshape(5, n_samples)
    om = 1.0 / Q
    xl, yl = chart.to_local(x[:n_samples], y[:n_samples])
    g = np.sqrt(_grad_sq(xl, yl, H))
    E1 = 1.0 / g
    E2 = 1.0 / (Q[0] * g)
    d_rho = (om[1] - om[2]) / (2 * dr)
    d_xi = (om[3] - om[4]) / (2 * dxi)
    c_rho = H * np.abs(d_rho)
    c_xi = H * np.abs(d_xi) / np.abs(np.log(r / H))
    report = {
        "H": H,
        "L": L,
        "n_samples": int(n_samples),
        "rho_range": [float(r.min()), float(r.max())],
        "min_E1": float(E1.min()),
        "min_E2": float(E2.min()),
        "min_omega": float(om[0].min()),
        "max_omega": float(om[0].max()),
        "min_Q": float(Q[0].min()),
        "max_Q": float(Q[0].max()),
        "max_H_domega_drho": float(c_rho.max()),
        "max_H_domega_dxi_over_log": float(c_xi.max()),
        "gradest_min": gradest_check(H, 10_000, seed),
    }
    report["finite"] = bool(all(np.isfinite(v) for v in report.values()
                                if isinstance(v, float)))
    return report
