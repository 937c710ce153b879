"""Prescribed incompressible advection fields.

Three families are provided: shear flows (u(y), 0), the cellular flow with
stream function U H sin(x/H) sin(y/H), and general stream-function flows
(analytic or sampled). Everything follows the convention u = (psi_y, -psi_x).

The solver never uses point velocities. It uses volume fluxes through the
cell faces, taken as differences of psi at the cell vertices, so the
discrete divergence of every psi-derived field vanishes identically.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from .grid import Grid

log = logging.getLogger(__name__)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True)
class FlowSpec:
    kind: str                      # "shear" | "cellular" | "stream" | "velocity"
    H: float                       # strip height
    U: float                       # amplitude
    velocity: Callable
    psi: Optional[Callable] = None
    x_period: Optional[float] = None
    max_speed: float = 0.0
    cell_scale: Optional[float] = None
    params: dict = field(default_factory=dict)

    @property
    def is_zero(self) -> bool:
        return self.max_speed == 0.0


def _segment_integrals(u: Callable, edges: np.ndarray) -> np.ndarray:
    """Gauss-Legendre integral of u over each [edges[k], edges[k+1]]."""
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(u(nodes.ravel()), dtype=np.float64).reshape(nodes.shape)
    return (vals * _GL_W[None, :]).sum(axis=1) * half


def _antiderivative(u: Callable, H: float, n_table: int = 4096):
    """Return a vectorized Psi(y) = int_0^y u, exact to quadrature precision
    at table nodes and cubic-Hermite interpolated in between."""
    edges = np.linspace(0.0, H, n_table + 1)
    table = np.concatenate([[0.0], np.cumsum(_segment_integrals(u, edges))])
    slope = np.asarray(u(edges), dtype=np.float64)
    dy = edges[1] - edges[0]

    def Psi(y):
        y = np.asarray(y, dtype=np.float64)
        k = np.clip(np.floor(y / dy).astype(np.int64), 0, n_table - 1)
        y0 = edges[k]
        # exact quadrature from the table node to y keeps accuracy off-table
        out = table[k] + _partial(u, y0, y)
        return out

    def _partial(u_, y0, y):
        half = 0.5 * (y - y0)
        mid = 0.5 * (y + y0)
        nodes = mid[..., None] + half[..., None] * _GL_X
        vals = np.asarray(u_(nodes.reshape(-1)), dtype=np.float64).reshape(nodes.shape)
        return (vals * _GL_W).sum(axis=-1) * half

    return Psi, table[-1], slope


def shear_flow(profile, H: float, n_samples: int = 4096) -> FlowSpec:
    """Shear flow (u(y), 0) from a callable profile or from midpoint samples."""
    if callable(profile):
        u = profile
    else:
        samples = np.asarray(profile, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("shear profile samples must be a 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("shear profile contains non-finite samples")
        ys = (np.arange(samples.size) + 0.5) * H / samples.size
        u = lambda y, ys=ys, s=samples: np.interp(y, ys, s)
    probe = np.asarray(u(np.linspace(0.0, H, n_samples + 1)), dtype=np.float64)
    if not np.all(np.isfinite(probe)):
        raise ValueError("shear profile is not finite on [0, H]")

    Psi0, total, _ = _antiderivative(u, H)
    mean = total / H
    if abs(mean) > 1e-12:
        log.warning("shear profile has mean %.3e; subtracting it", mean)
        u_raw = u
        u = lambda y, f=u_raw, m=mean: np.asarray(f(y), dtype=np.float64) - m
        Psi = lambda y, P=Psi0, m=mean: P(y) - m * np.asarray(y, dtype=np.float64)
        probe = probe - mean
    else:
        Psi = Psi0
    max_speed = float(np.abs(probe).max())

    def velocity(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.asarray(u(y), dtype=np.float64), np.zeros_like(y)

    def psi(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return Psi(y)

    return FlowSpec("shear", float(H), max_speed, velocity, psi,
                    x_period=None, max_speed=max_speed,
                    params={"profile": u, "mean_removed": mean if abs(mean) > 1e-12 else 0.0})


def sine_shear_flow(U: float, H: float, modes: int = 1) -> FlowSpec:
    """u(y) = U sin(2 pi m y / H)."""
    k = 2.0 * math.pi * modes / H
    fl = shear_flow(lambda y: U * np.sin(k * np.asarray(y, float)), H)
    return FlowSpec(**{**fl.__dict__, "params": {**fl.params, "name": "sine_shear", "U": U,
                                                "modes": modes}})


def zero_flow(H: float) -> FlowSpec:
    def velocity(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.zeros_like(x), np.zeros_like(y)

    def psi(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.zeros_like(x)

    return FlowSpec("shear", float(H), 0.0, velocity, psi, max_speed=0.0,
                    params={"name": "zero"})


def cellular_flow(U: float, H: float) -> FlowSpec:
    """Cellular flow with psi = U H sin(x/H) sin(y/H) on the strip [0, pi H]."""
    if U < 0 or not H > 0:
        raise ValueError("cellular flow needs U >= 0 and H > 0")

    def velocity(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return (U * np.sin(x / H) * np.cos(y / H),
                -U * np.cos(x / H) * np.sin(y / H))

    def psi(x, y):
        return U * H * np.sin(np.asarray(x, float) / H) * np.sin(np.asarray(y, float) / H)

    return FlowSpec("cellular", math.pi * H, float(U), velocity, psi,
                    x_period=2.0 * math.pi * H, max_speed=float(U), cell_scale=float(H),
                    params={"name": "cellular", "U": U, "H": H})


def stream_function_flow(psi: Callable, H: float, U: float,
                         x_period: Optional[float] = None,
                         velocity: Optional[Callable] = None,
                         name: str = "stream") -> FlowSpec:
    """Flow from an analytic stream function. Velocity by centred differences
    of psi unless an analytic velocity is supplied."""
    if velocity is None:
        eps = 1e-6 * H

        def velocity(x, y):
            x, y = np.asarray(x, float), np.asarray(y, float)
            u1 = (psi(x, y + eps) - psi(x, y - eps)) / (2 * eps)
            u2 = -(psi(x + eps, y) - psi(x - eps, y)) / (2 * eps)
            return u1, u2

    xs = np.linspace(0.0, x_period if x_period else H, 129)
    ys = np.linspace(0.0, H, 129)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    u1, u2 = velocity(X, Y)
    max_speed = float(np.sqrt(u1 ** 2 + u2 ** 2).max())
    return FlowSpec("stream", float(H), float(U), velocity, psi, x_period=x_period,
                    max_speed=max_speed, params={"name": name, "U": U})


def perturbed_shear_flow(U: float, H: float, eps: float = 0.5) -> FlowSpec:
    """Percolating example: sine shear plus a cellular perturbation.

    psi = U H / (2 pi) * (-cos(2 pi y/H) + eps sin(2 pi x/H) sin(2 pi y/H)),
    periodic in x with period H, constant on the walls y = 0, H.
    """
    k = 2.0 * math.pi / H

    def psi(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return U / k * (-np.cos(k * y) + eps * np.sin(k * x) * np.sin(k * y))

    def velocity(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        u1 = U * (np.sin(k * y) + eps * np.sin(k * x) * np.cos(k * y))
        u2 = -U * eps * np.cos(k * x) * np.sin(k * y)
        return u1, u2

    fl = stream_function_flow(psi, H, U, x_period=H, velocity=velocity,
                              name="perturbed_shear")
    return FlowSpec(**{**fl.__dict__, "params": {"name": "perturbed_shear", "U": U, "eps": eps}})


def sampled_stream_function_flow(psi_nodes: np.ndarray, H: float, x_period: float,
                                 U: float) -> FlowSpec:
    """Flow from psi sampled on nodes x_i = i P / n (periodic), y_j = j H / (m - 1).

    psi is bilinearly interpolated; velocities are centred differences at the
    nodes, bilinearly interpolated in between.
    """
    P = np.asarray(psi_nodes, dtype=np.float64)
    nxp, nyn = P.shape
    dxp, dyp = x_period / nxp, H / (nyn - 1)
    Pe = np.concatenate([P, P[:1]], axis=0)          # closed in x
    u1n = np.gradient(Pe, dyp, axis=1)
    Pw = np.concatenate([P[-1:], P, P[:2]], axis=0)
    u2n = -(Pw[2:] - Pw[:-2]) / (2 * dxp)           # shape (nxp + 1, nyn)

    def _bilinear(A, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        s = np.mod(x, x_period) / dxp
        i = np.minimum(np.floor(s).astype(np.int64), nxp - 1)
        fx = s - i
        t = np.clip(y / dyp, 0.0, nyn - 1)
        j = np.minimum(np.floor(t).astype(np.int64), nyn - 2)
        fy = t - j
        return ((1 - fx) * (1 - fy) * A[i, j] + fx * (1 - fy) * A[i + 1, j]
                + (1 - fx) * fy * A[i, j + 1] + fx * fy * A[i + 1, j + 1])

    def psi(x, y):
        return _bilinear(Pe, x, y)

    def velocity(x, y):
        return _bilinear(u1n, x, y), _bilinear(u2n, x, y)

    max_speed = float(np.sqrt(u1n ** 2 + u2n ** 2).max())
    return FlowSpec("stream", float(H), float(U), velocity, psi, x_period=float(x_period),
                    max_speed=max_speed, params={"name": "sampled", "U": U})


def velocity_field_flow(velocity: Callable, H: float, max_speed: float) -> FlowSpec:
    """A flow known only through its velocity (diagnostics only)."""
    return FlowSpec("velocity", float(H), float(max_speed), velocity, None,
                    max_speed=float(max_speed), params={"name": "velocity"})


def sample_velocity(flow: FlowSpec, x, y):
    y_arr = np.asarray(y, dtype=np.float64)
    if np.any(y_arr < 0.0) or np.any(y_arr > flow.H):
        raise ValueError(f"y outside the strip [0, {flow.H}]")
    return flow.velocity(x, y_arr)


def check_mean_zero(flow: FlowSpec, n_x: int = 64, n_seg: int = 256) -> float:
    """max over sampled x of | int_0^H u1(x, y) dy | (composite Gauss-Legendre)."""
    period = flow.x_period or flow.H
    xs = (np.arange(n_x) + 0.5) * period / n_x
    edges = np.linspace(0.0, flow.H, n_seg + 1)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    worst = 0.0
    for x in xs:
        u1, _ = flow.velocity(np.full(nodes.shape, x), nodes)
        val = float(((u1 * _GL_W[None, :]).sum(axis=1) * half).sum())
        worst = max(worst, abs(val))
    return worst


def _quantize(psi_v: np.ndarray) -> np.ndarray:
    """Round psi onto a dyadic lattice so that all vertex differences and
    their sums are exact in floating point."""
    scale = float(np.abs(psi_v).max())
    if scale == 0.0:
        return psi_v.copy()
    q = math.ldexp(1.0, max(math.frexp(scale)[1] - 50, -1074))
    return np.round(psi_v / q) * q


def vertex_psi(flow: FlowSpec, grid: Grid, window_offset: float = 0.0) -> np.ndarray:
    xv = grid.x_lo + window_offset + np.arange(grid.nx + 1) * grid.dx
    yv = np.arange(grid.ny + 1) * grid.dy
    X, Y = np.meshgrid(xv, yv, indexing="ij")
    P = _quantize(np.asarray(flow.psi(X, Y), dtype=np.float64))
    if grid.periodic:
        # psi(x, H) - psi(x, 0) must be a single constant for the wrap to close
        jump = _quantize(np.array([np.median(P[:, -1] - P[:, 0])]))[0]
        P[:, -1] = P[:, 0] + jump
    return P


def face_fluxes(flow: FlowSpec, grid: Grid, window_offset: float = 0.0):
    """Volume fluxes through cell faces.

    Fx[i, j]: flux in +x through the face left of cell (i, j), shape (nx+1, ny).
    Fy[i, j]: flux in +y through the face below cell (i, j), shape (nx, ny+1);
    with periodic y, Fy[:, ny] is the wrap face and equals Fy[:, 0].
    """
    if flow.psi is None:
        raise ValueError("face fluxes need a stream function")
    if flow.is_zero:
        return np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1))
    P = vertex_psi(flow, grid, window_offset)
    Fx = P[:, 1:] - P[:, :-1]
    Fy = -(P[1:, :] - P[:-1, :])
    if grid.periodic:
        Fy[:, -1] = Fy[:, 0]
    else:
        wall = max(np.abs(Fy[:, 0]).max(), np.abs(Fy[:, -1]).max())
        if wall > 1e-12 * max(1.0, np.abs(P).max()):
            log.warning("flow crosses the Neumann walls (max wall flux %.3e)", wall)
    return np.ascontiguousarray(Fx), np.ascontiguousarray(Fy)


def discrete_divergence(Fx: np.ndarray, Fy: np.ndarray, grid: Grid) -> np.ndarray:
    net = (Fx[1:] - Fx[:-1]) + (Fy[:, 1:] - Fy[:, :-1])
    return net / (grid.dx * grid.dy)


def check_divergence(flow: FlowSpec, grid: Grid, window_offset: float = 0.0) -> float:
    """max |discrete divergence| on the grid.

    Stream-function flows use the vertex-difference fluxes of the solver;
    velocity-only flows use face-centred velocities."""
    if flow.psi is not None:
        Fx, Fy = face_fluxes(flow, grid, window_offset)
        return float(np.abs(discrete_divergence(Fx, Fy, grid)).max())
    xf = grid.x_lo + window_offset + np.arange(grid.nx + 1) * grid.dx
    xc = grid.x_lo + window_offset + (np.arange(grid.nx) + 0.5) * grid.dx
    yf = np.arange(grid.ny + 1) * grid.dy
    yc = (np.arange(grid.ny) + 0.5) * grid.dy
    ux, _ = flow.velocity(*np.meshgrid(xf, yc, indexing="ij"))
    _, uy = flow.velocity(*np.meshgrid(xc, yf, indexing="ij"))
    div = np.diff(ux, axis=0) / grid.dx + np.diff(uy, axis=1) / grid.dy
    return float(np.abs(div).max())


# --------------------------------------------------------------------------
# percolating tubes


@dataclass(frozen=True)
class Tube:
    sign: int
    psi_bottom: float
    psi_top: float
    flux: float
    h: float
    n_bands: int
    min_E1: float = float("nan")
    flux_density_ratio: float = float("nan")   # min/max of E1 |u| over the tube

    @property
    def geometry_verified(self) -> bool:
        return bool(self.flux_density_ratio >= 0.5)


@dataclass(frozen=True)
class TubeFamily:
    tubes: tuple
    n_levels: int
    U: float

    @property
    def total_flux(self) -> float:
        return float(sum(t.flux for t in self.tubes))

    def __len__(self):
        return len(self.tubes)


_RING = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


def critical_nodes(P: np.ndarray) -> np.ndarray:
    """Discrete critical points of node samples P (periodic in axis 0).

    A node is critical if it is a (non-strict) extremum over its 8-ring or a
    saddle (>= 4 sign changes of P_nb - P around the ring)."""
    nxp, nyn = P.shape
    pad = np.full((nxp, nyn + 2), np.nan)
    pad[:, 1:-1] = P
    diffs = []
    for di, dj in _RING:
        nb = np.roll(pad, -di, axis=0)[:, 1 + dj: 1 + dj + nyn]
        diffs.append(nb - P)
    D = np.stack(diffs)
    valid = ~np.isnan(D)
    Dz = np.where(valid, D, 0.0)
    is_max = np.all(Dz <= 0.0, axis=0)
    is_min = np.all(Dz >= 0.0, axis=0)
    S = np.sign(Dz).astype(np.int8)
    prev = np.zeros((nxp, nyn), dtype=np.int8)
    for k in range(8):                       # last nonzero sign on the ring
        prev = np.where(S[k] != 0, S[k], prev)
    changes = np.zeros((nxp, nyn), dtype=np.int16)
    for k in range(8):
        nz = S[k] != 0
        changes += (nz & (S[k] != prev)).astype(np.int16)
        prev = np.where(nz, S[k], prev)
    return is_max | is_min | (changes >= 4)


class _OffsetUnionFind:
    """Union-find that tracks integer x-windings between members."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.off = [0] * n
        self.wraps = [False] * n

    def find(self, a):
        path = []
        while self.parent[a] != a:
            path.append(a)
            a = self.parent[a]
        root, acc = a, 0
        for node in reversed(path):
            acc += self.off[node]
            self.off[node] = acc
            self.parent[node] = root
        return root

    def offset(self, a):
        self.find(a)
        return 0 if self.parent[a] == a else self.off[a]

    def union(self, a, b, w):
        """Record pos(b) = pos(a) + w."""
        ra, rb = self.find(a), self.find(b)
        oa, ob = self.offset(a), self.offset(b)
        if ra == rb:
            if ob - oa != w:
                self.wraps[ra] = True
            return
        self.parent[rb] = ra
        self.off[rb] = oa + w - ob
        self.wraps[ra] = self.wraps[ra] or self.wraps[rb]


def _band_components(mask: np.ndarray):
    """Components of a cell mask periodic in axis 0; returns (labels, wraps)."""
    lab, n = ndimage.label(mask)
    if n == 0:
        return lab, np.zeros(1, dtype=bool)
    uf = _OffsetUnionFind(n + 1)
    seam = mask[-1] & mask[0]
    for j in np.nonzero(seam)[0]:
        uf.union(int(lab[-1, j]), int(lab[0, j]), 1)
    roots = np.array([uf.find(k) for k in range(n + 1)])
    wraps = np.array([uf.wraps[r] for r in roots])
    return roots[lab] * mask, wraps[roots]


def extract_tubes(psi_nodes: np.ndarray, n_levels: int, U: float,
                  x_period: Optional[float] = None, H: Optional[float] = None,
                  speed_nodes: Optional[np.ndarray] = None) -> TubeFamily:
    """Percolating tubes of a stream function sampled on one x-period.

    psi_nodes has shape (nxp, nyn): x nodes i P / nxp (periodic, endpoint
    excluded), y nodes spanning [0, H] including both walls.
    """
    if n_levels < 2:
        raise ValueError("n_levels must be >= 2")
    P = np.asarray(psi_nodes, dtype=np.float64)
    pmin, pmax = float(P.min()), float(P.max())
    if not pmax > pmin or U <= 0:
        return TubeFamily((), n_levels, U)
    nxp, nyn = P.shape
    crit = critical_nodes(P)
    Pc = np.concatenate([P, P[:1]], axis=0)
    corners = np.stack([Pc[:-1, :-1], Pc[1:, :-1], Pc[:-1, 1:], Pc[1:, 1:]])
    cmin, cmax = corners.min(axis=0), corners.max(axis=0)
    critc = np.concatenate([crit, crit[:1]], axis=0)
    cell_crit = critc[:-1, :-1] | critc[1:, :-1] | critc[:-1, 1:] | critc[1:, 1:]
    width = (pmax - pmin) / n_levels
    k_lo = np.clip(np.floor((cmin - pmin) / width).astype(np.int64), 0, n_levels - 1)
    k_hi = np.clip(np.floor((cmax - pmin) / width).astype(np.int64), 0, n_levels - 1)

    comp_ids = {}           # (band, local label) -> global id
    comp_band = []
    merge = []
    prev_lab = None
    for k in range(n_levels):
        mask = (k_lo <= k) & (k_hi >= k)
        lab, wraps = _band_components(mask)
        good = np.zeros(lab.max() + 1 if lab.size else 1, dtype=bool)
        if lab.max() > 0:
            bad = np.unique(lab[cell_crit & mask])
            for lbl in np.unique(lab[mask]):
                good[lbl] = bool(wraps[lbl]) and lbl not in bad
        lab = np.where(good[lab], lab, 0)
        for lbl in np.unique(lab[lab > 0]):
            comp_ids[(k, int(lbl))] = len(comp_band)
            comp_band.append(k)
        if prev_lab is not None:
            both = (prev_lab > 0) & (lab > 0)
            if both.any():
                pairs = np.unique(np.stack([prev_lab[both], lab[both]], axis=1), axis=0)
                for a, b in pairs:
                    merge.append((comp_ids[(k - 1, int(a))], comp_ids[(k, int(b))]))
        prev_lab = lab
        if k == 0:
            labels_by_band = {}
        labels_by_band[k] = lab

    n = len(comp_band)
    if n == 0:
        return TubeFamily((), n_levels, U)
    uf = _OffsetUnionFind(n)
    for a, b in merge:
        uf.union(a, b, 0)
    groups = {}
    for gid in range(n):
        groups.setdefault(uf.find(gid), []).append(gid)

    P_period = x_period if x_period else float(nxp)
    dxp = P_period / nxp
    dyp = (H / (nyn - 1)) if H else 1.0
    # cell-centred gradient of psi
    gx = 0.5 * ((Pc[1:, :-1] - Pc[:-1, :-1]) + (Pc[1:, 1:] - Pc[:-1, 1:])) / dxp
    gy = 0.5 * ((Pc[:-1, 1:] - Pc[:-1, :-1]) + (Pc[1:, 1:] - Pc[1:, :-1])) / dyp
    grad = np.hypot(gx, gy)
    inv = {v: k for k, v in comp_ids.items()}

    tubes = []
    for members in groups.values():
        bands = sorted({comp_band[m] for m in members})
        cells = np.zeros_like(cmin, dtype=bool)
        for m in members:
            k, lbl = inv[m]
            cells |= labels_by_band[k] == lbl
        flux = len(bands) * width
        sign = 1 if gy[cells].mean() > 0 else -1
        E1 = U / np.maximum(grad[cells], 1e-300)
        speed = grad[cells] if speed_nodes is None else speed_nodes[cells]
        density = E1 * speed
        ratio = float(density.min() / density.max()) if density.max() > 0 else float("nan")
        tubes.append(Tube(sign=sign, psi_bottom=pmin + bands[0] * width,
                          psi_top=pmin + (bands[-1] + 1) * width, flux=flux,
                          h=flux / (2.0 * U), n_bands=len(bands),
                          min_E1=float(E1.min()), flux_density_ratio=ratio))
    tubes.sort(key=lambda t: (t.psi_bottom, t.sign))
    return TubeFamily(tuple(tubes), n_levels, U)


def tube_family_for_flow(flow: FlowSpec, n_levels: int = 512, nx_period: int = 64,
                         ny_nodes: int = 513) -> TubeFamily:
    """Sample psi on one x-period of `flow` and extract its tubes."""
    if flow.psi is None:
        raise ValueError("tube extraction needs a stream function")
    period = flow.x_period or flow.H
    xs = np.arange(nx_period) * period / nx_period
    ys = np.linspace(0.0, flow.H, ny_nodes)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = np.asarray(flow.psi(X, Y), dtype=np.float64)
    # flow speed at cell centres, for the flux-density check
    xc = xs + 0.5 * period / nx_period
    yc = 0.5 * (ys[1:] + ys[:-1])
    u1, u2 = flow.velocity(*np.meshgrid(xc, yc, indexing="ij"))
    speed = np.hypot(u1, u2)
    return extract_tubes(P, n_levels, flow.U, x_period=period, H=flow.H,
                         speed_nodes=speed)
