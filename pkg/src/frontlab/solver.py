"""Explicit finite-volume integrator for
    T_t + u . grad T = kappa Lap T + (v0^2 / kappa) f(T)
on a moving window of the strip.

Each Strang sub-step (reaction, upwind advection, 5-point diffusion) is
monotone under the step restriction of `stable_dt`, so values stay in [0, 1].
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import _kernels as K
from .diagnostics import DiagnosticsRecord, make_record
from .flows import FlowSpec, face_fluxes
from .grid import Grid, TemperatureField, shift_window
from .reactions import ReactionSpec

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-10
# slack on the discrete subsolution residual (in units of v0^2/kappa)
CERT_TOL = 1e-6


class MaxPrincipleError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    kappa: float
    v0: float
    reaction: ReactionSpec
    flow: FlowSpec
    cfl_safety: float = 0.9

    def __post_init__(self):
        errors = []
        if not self.kappa > 0:
            errors.append(f"kappa must be positive, got {self.kappa}")
        if not self.v0 > 0:
            errors.append(f"v0 must be positive, got {self.v0}")
        if not 0 < self.cfl_safety <= 1:
            errors.append(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if errors:
            raise ValueError("invalid solver config: " + "; ".join(errors))

    @property
    def rate(self) -> float:
        """v0^2 / kappa, the reaction rate prefactor."""
        return self.v0 ** 2 / self.kappa

    @property
    def l(self) -> float:
        return self.kappa / self.v0


def stable_dt(config: SolverConfig, grid: Grid) -> float:
    h = min(grid.dx, grid.dy)
    limits = [h * h / (4.0 * config.kappa)]
    if config.flow.max_speed > 0:
        limits.append(grid.dx / (2.0 * config.flow.max_speed))
    Lf = config.reaction.Lf
    if Lf > 0:
        limits.append(0.2 * config.kappa / (config.v0 ** 2 * Lf))
    return config.cfl_safety * min(limits)


def make_front_initial_data(grid: Grid, lam: float, x_front: float) -> TemperatureField:
    """y-uniform sigmoid 1 / (1 + exp(lam (x - x_front)))."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    margin = max(5.0 / lam, 2.0 * grid.dx)
    if x_front - grid.x_lo < margin or grid.x_hi - x_front < margin:
        raise ValueError(
            f"x_front={x_front} is within {margin:.3g} of the window closure "
            f"[{grid.x_lo}, {grid.x_hi}]")
    z = lam * (grid.x_centers - x_front)
    prof = 0.5 * (1.0 - np.tanh(0.5 * z))       # overflow-free logistic
    T = np.repeat(prof[:, None], grid.ny, axis=1)
    return TemperatureField(grid, T, meta={"lambda": lam, "x_front": x_front})


class _FluxCache:
    """Face fluxes of the flow for the current window offset."""

    def __init__(self, flow: FlowSpec, grid: Grid):
        self.flow, self.grid = flow, grid
        self.offset = None
        self.has_flow = not flow.is_zero
        self.x_independent = flow.kind == "shear"
        self.Fx = np.zeros((grid.nx + 1, grid.ny))
        self.Fy = np.zeros((grid.nx, grid.ny + 1))
        self.outflow = 0.0
        self.has_fy = False
        self.parts = (self.Fx, self.Fx, self.Fy, self.Fy)

    def get(self, offset: float):
        if not self.has_flow:
            return self.Fx, self.Fy
        if self.offset is None or (offset != self.offset and not self.x_independent):
            self.Fx, self.Fy = face_fluxes(self.flow, self.grid, offset)
            if not self.grid.periodic:
                self.Fy[:, 0] = 0.0
                self.Fy[:, -1] = 0.0
            self.parts = (np.maximum(self.Fx, 0.0), np.minimum(self.Fx, 0.0),
                          np.maximum(self.Fy, 0.0), np.minimum(self.Fy, 0.0))
            self.outflow = K.max_outflow(self.Fx, self.Fy, self.grid.periodic)
            self.has_fy = bool(np.any(self.Fy != 0.0))
            self.offset = offset
        return self.Fx, self.Fy

    def courant_dt(self) -> float:
        """Largest dt keeping the upwind update a convex combination."""
        if self.outflow <= 0:
            return math.inf
        return self.grid.dx * self.grid.dy / self.outflow


def check_subsolution(fld: TemperatureField, config: SolverConfig,
                      return_field: bool = False):
    """Minimum of the discrete kappa Lap T - u.grad T + (v0^2/kappa) f(T).

    A nonnegative minimum (up to CERT_TOL * v0^2/kappa) certifies T_t >= 0
    for all later times."""
    g = fld.grid
    cache = _FluxCache(config.flow, g)
    cache.get(fld.window_offset)
    r = config.reaction
    res = K.residual(fld.values, *cache.parts, cache.has_flow, g.dx, g.dy, config.kappa,
                     config.rate * r.scale, r.code, r.p0, r.p1, g.periodic)
    mn = float(res.min())
    return (mn, res) if return_field else mn


def is_certified(min_residual: float, config: SolverConfig) -> bool:
    return min_residual >= -CERT_TOL * config.rate


def _enforce_bounds(T: np.ndarray, mn: float, mx: float, bad: bool, t: float):
    if bad:
        raise MaxPrincipleError(f"NaN in temperature at t={t:.6g}")
    if mn < -CLAMP_TOL or mx > 1.0 + CLAMP_TOL:
        raise MaxPrincipleError(
            f"maximum principle violated at t={t:.6g}: min={mn:.3e}, max={mx:.3e} "
            "(time step too large for the stencil)")
    if mn < 0.0 or mx > 1.0:
        np.clip(T, 0.0, 1.0, out=T)


class Simulation:
    """Owns the working buffers of one run."""

    def __init__(self, config: SolverConfig, fld: TemperatureField,
                 shift_threshold: float = 1e-6):
        self.config = config
        self.field = fld.copy()
        self.grid = fld.grid
        self.shift_threshold = shift_threshold
        self._work = np.empty_like(self.field.values)
        self._fluxes = _FluxCache(config.flow, self.grid)
        self._fluxes.get(self.field.window_offset)
        # extremes of T over all steps, before any roundoff clamp
        self.raw_min, self.raw_max = float(fld.values.min()), float(fld.values.max())

    def dt_max(self) -> float:
        return min(stable_dt(self.config, self.grid),
                   self.config.cfl_safety * self._fluxes.courant_dt())

    def maybe_shift(self) -> float:
        self.field, shift = shift_window(self.field, self.shift_threshold)
        if shift:
            self._fluxes.get(self.field.window_offset)
        return shift

    def step(self, dt: float) -> float:
        """Advance by dt in place. Returns the closure inflow over the step
        as a window mass (T integrated over area, divided by H)."""
        if dt > self.dt_max() * (1 + 1e-12):
            raise ValueError(f"dt={dt:.4g} exceeds the stable step {self.dt_max():.4g}")
        c, g, r = self.config, self.grid, self.config.reaction
        self._fluxes.get(self.field.window_offset)
        T = self.field.values
        inflow, mn, mx, bad = K.strang_step(
            T, self._work, *self._fluxes.parts, self._fluxes.has_flow, self._fluxes.has_fy,
            g.dx, g.dy, c.kappa,
            c.rate * r.scale, r.code, r.p0, r.p1, dt, g.periodic)
        self.field.t += dt
        self.raw_min, self.raw_max = min(self.raw_min, mn), max(self.raw_max, mx)
        _enforce_bounds(T, mn, mx, bad, self.field.t)
        return inflow / g.H


def step(fld: TemperatureField, config: SolverConfig, dt: float) -> TemperatureField:
    """Pure single step; returns a new field."""
    sim = Simulation(config, fld)
    sim.step(dt)
    return sim.field


def run(config: SolverConfig, grid: Grid, T0: TemperatureField, t_end: float,
        sample_every: float, shift: bool = True,
        shift_threshold: float = 1e-6) -> Tuple[List[DiagnosticsRecord], TemperatureField]:
    """Integrate to t_end, recording diagnostics every `sample_every`.

    Steps are sized to land exactly on sample times. The window may shift
    before any step except the last step before a sample, so the mass-based
    burning rate always compares fields on the same window.
    """
    if T0.grid != grid:
        raise ValueError("initial field grid does not match the grid argument")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if not sample_every > 0:
        raise ValueError("sample_every must be positive")
    sim = Simulation(config, T0, shift_threshold)
    t0 = T0.t
    records = [make_record(sim.field, config, prev=None)]
    n_samples = int(math.floor(t_end / sample_every + 1e-9))
    times = [t0 + k * sample_every for k in range(1, n_samples + 1)]
    if not times or times[-1] < t0 + t_end - 1e-12 * max(1.0, t_end):
        if t_end > 0:
            times.append(t0 + t_end)
    n_steps = 0
    for ts in times:
        shifted = False
        while True:
            remaining = ts - sim.field.t
            n = max(1, math.ceil(remaining / sim.dt_max() - 1e-9))
            dt = remaining / n
            if n == 1:
                break
            if shift and sim.maybe_shift():
                shifted = True
                continue
            sim.step(dt)
            n_steps += 1
        if shift and sim.maybe_shift():
            shifted = True
            dt = ts - sim.field.t
        prev = sim.field.copy()
        inflow = sim.step(dt)
        sim.field.t = ts
        n_steps += 1
        # centred mass difference: one look-ahead step on a scratch copy
        ahead = Simulation(config, sim.field, shift_threshold)
        inflow += ahead.step(dt)
        rec = make_record(sim.field, config, prev=prev, dt=dt, inflow=inflow,
                          records=records, shifted=shifted, ahead=ahead.field)
        records.append(rec)
    log.debug("run finished: %d steps, %d samples, offset %.4g",
              n_steps, len(records), sim.field.window_offset)
    sim.field.meta.update(n_steps=n_steps, raw_min=sim.raw_min, raw_max=sim.raw_max)
    return records, sim.field
