"""Discretization of the strip R x [0, H] as a finite, moving window.

The window is a cell-centred uniform grid. In y the strip is closed with
either a Neumann (mirror ghost rows) or a periodic condition. In x the
window is closed by ghost columns pinned to T = 1 on the left and T = 0 on
the right; the window is shifted by whole cells as the front advances.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Union

import numpy as np

MIN_CELLS = 8


class BC(str, Enum):
    NEUMANN = "neumann"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Grid:
    H: float
    ny: int
    x_lo: float
    x_hi: float
    nx: int
    bc_y: BC = BC.NEUMANN

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.nx

    @property
    def dy(self) -> float:
        return self.H / self.ny

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def periodic(self) -> bool:
        return self.bc_y is BC.PERIODIC

    @property
    def x_centers(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y_centers(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.dy

    def row_index(self, j: int) -> int:
        """Map a (possibly ghost) row index onto a stored row."""
        if self.periodic:
            return j % self.ny
        # mirror ghost rows: -1 -> 0, ny -> ny - 1, -2 -> 1, ...
        if j < 0:
            return -j - 1
        if j >= self.ny:
            return 2 * self.ny - j - 1
        return j


def build_grid(H, ny, x_lo, x_hi, nx, bc_y="neumann") -> Grid:
    errors = []
    if not H > 0:
        errors.append(f"H must be positive, got {H}")
    if not x_hi > x_lo:
        errors.append(f"x_hi must exceed x_lo, got [{x_lo}, {x_hi}]")
    if int(nx) != nx or nx < MIN_CELLS:
        errors.append(f"nx must be an integer >= {MIN_CELLS}, got {nx}")
    if int(ny) != ny or ny < MIN_CELLS:
        errors.append(f"ny must be an integer >= {MIN_CELLS}, got {ny}")
    try:
        bc = BC(bc_y.lower() if isinstance(bc_y, str) else bc_y)
    except ValueError:
        errors.append(f"bc_y must be 'neumann' or 'periodic', got {bc_y!r}")
        bc = None
    if errors:
        raise ValueError("invalid grid: " + "; ".join(errors))
    return Grid(float(H), int(ny), float(x_lo), float(x_hi), int(nx), bc)


@dataclass
class TemperatureField:
    grid: Grid
    values: np.ndarray
    t: float = 0.0
    window_offset: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})")

    @property
    def x_abs(self) -> np.ndarray:
        """Absolute x of the cell centres (window offset included)."""
        return self.grid.x_centers + self.window_offset

    def copy(self) -> "TemperatureField":
        return replace(self, values=self.values.copy(), meta=dict(self.meta))


Integrand = Union[np.ndarray, Callable[[np.ndarray], np.ndarray], float]


def integrate_over_window(fld: TemperatureField, integrand: Integrand = None) -> float:
    """Midpoint rule for  int g dx dy / H  over the window.

    `integrand` is either an array of pointwise values, a callable applied
    to the temperature values, a constant, or None (integrate T itself).
    """
    g = fld.grid
    if integrand is None:
        vals = fld.values
    elif callable(integrand):
        vals = integrand(fld.values)
    else:
        vals = integrand
    vals = np.broadcast_to(np.asarray(vals, dtype=np.float64), (g.nx, g.ny))
    return float(vals.sum() * g.dx * g.dy / g.H)


def window_mass(fld: TemperatureField) -> float:
    return integrate_over_window(fld)


def shift_window(fld: TemperatureField, right_tail_threshold: float = 1e-6,
                 tail_fraction: float = 0.1, target_fraction: float = 0.7):
    """Shift the window left when the right tail heats up.

    Returns ``(field, shift_amount)``. The trigger is the maximum of T over
    the rightmost `tail_fraction` of columns exceeding the threshold; the
    window then moves by whole cells so that the rightmost column above the
    threshold lands at `target_fraction` of the window.
    """
    if not 0.0 < right_tail_threshold < 1.0:
        raise ValueError("right_tail_threshold must lie in (0, 1)")
    g = fld.grid
    T = fld.values
    n_tail = max(1, int(round(tail_fraction * g.nx)))
    if T[g.nx - n_tail:].max() <= right_tail_threshold:
        return fld, 0.0
    hot = np.nonzero(T.max(axis=1) > right_tail_threshold)[0]
    n_shift = int(hot[-1]) - int(target_fraction * g.nx)
    if n_shift <= 0:
        return fld, 0.0
    new = np.empty_like(T)
    new[: g.nx - n_shift] = T[n_shift:]
    new[g.nx - n_shift:] = 0.0
    shift = n_shift * g.dx
    out = replace(fld, values=new, window_offset=fld.window_offset + shift,
                  meta=dict(fld.meta))
    return out, shift
