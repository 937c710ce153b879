"""Lower-bound functionals for the bulk burning rate.

The constants C, C1, C2 of the bounds are never known explicitly; they are
inputs here (default 1), and measured speeds are compared through the implied
constant C* = c / (functional at unit constants).
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 4096


@dataclass(frozen=True)
class Scales:
    l: float           # laminar front width kappa / v0
    Pe: float          # U H / kappa
    tau_c: float       # chemical time kappa / v0^2
    tau_u: float       # turnover time H / U
    flags: tuple = ()

    @property
    def ratio(self) -> float:
        """tau_c / tau_u."""
        return self.tau_c / self.tau_u if math.isfinite(self.tau_u) else 0.0


def laminar_scales(kappa: float, v0: float, U: float, H: float) -> Scales:
    if not (kappa > 0 and v0 > 0 and H > 0) or U < 0:
        raise ValueError("need kappa, v0, H > 0 and U >= 0")
    flags = []
    tau_c = kappa / v0 ** 2
    if U == 0:
        flags.append("U=0: Pe=0, turnover time infinite")
        tau_u = math.inf
    else:
        tau_u = H / U
        direct = kappa * U / (v0 ** 2 * H)
        if abs(tau_c / tau_u - direct) > 1e-12 * max(1.0, direct):
            raise ArithmeticError("inconsistent time-scale ratio")
    return Scales(kappa / v0, U * H / kappa, tau_c, tau_u, tuple(flags))


@dataclass(frozen=True)
class Interval:
    a: float
    b: float
    sign: int
    flux: float          # int_a^b |u| dy
    weight: float        # (1 + l/h)^-1 flux / H

    @property
    def c(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def h(self) -> float:
        return 0.5 * (self.b - self.a)


@dataclass
class BoundReport:
    value: float
    value_unit: float                 # functional with all constants = 1
    regime: str
    geometry: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------- intervals


def _valid_starts(absu: np.ndarray, sgn: np.ndarray) -> np.ndarray:
    """s[j] = smallest i such that samples i..j share a sign and
    min |u| >= max |u| / 2 (-1 when sample j itself is zero)."""
    n = absu.size
    s = np.full(n, -1, dtype=np.int64)
    for j in range(n):
        if sgn[j] == 0:
            continue
        rev = absu[j::-1]
        same = sgn[j::-1] == sgn[j]
        ok = same & (2.0 * np.minimum.accumulate(rev) >= np.maximum.accumulate(rev))
        bad = np.nonzero(~ok)[0]
        length = bad[0] if bad.size else j + 1
        s[j] = j - length + 1
    return s


def _dp(weights_fn, starts: np.ndarray, n: int):
    best = np.zeros(n + 1)
    choice = np.full(n + 1, -1, dtype=np.int64)
    for j in range(n):
        best[j + 1], choice[j + 1] = best[j], -1
        if starts[j] < 0:
            continue
        i = np.arange(starts[j], j + 1)
        cand = best[i] + weights_fn(i, j)
        k = int(np.argmax(cand))
        if cand[k] > best[j + 1]:
            best[j + 1], choice[j + 1] = cand[k], i[k]
    picks = []
    j = n
    while j > 0:
        if choice[j] < 0:
            j -= 1
        else:
            picks.append((int(choice[j]), j - 1))
            j = int(choice[j])
    return float(best[n]), picks[::-1]


def interval_weight(flux: np.ndarray, h: np.ndarray, l: float, H: float) -> np.ndarray:
    return flux / H / (1.0 + l / h)


def select_intervals(y: np.ndarray, u: np.ndarray, l: float, H: Optional[float] = None,
                     periodic: bool = False) -> List[Interval]:
    """Disjoint family of sign-definite intervals maximizing the total weight
    (1 + l/h)^-1 int |u| dy / H.

    `y` are the centres of uniform cells of width H / n; candidate intervals
    are unions of consecutive cells on which u keeps one sign and
    min |u| >= max |u| / 2. With `periodic`, the profile is first rotated to
    start at a sign change so the result does not depend on where the
    periodic profile was cut.
    """
    y = np.asarray(y, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    n = u.size
    if n < 16 or y.size != n:
        raise ValueError("need at least 16 matching samples")
    if H is None:
        H = float(n * (y[1] - y[0]))
    d = H / n
    shift = 0
    if periodic:
        sg = np.sign(u)
        change = np.nonzero(sg != np.roll(sg, 1))[0]
        if change.size:
            shift = int(change[0])
    uu = np.roll(u, -shift)
    absu, sgn = np.abs(uu), np.sign(uu).astype(np.int64)
    if not np.any(absu > 0):
        return []
    cum = np.concatenate([[0.0], np.cumsum(absu * d)])
    starts = _valid_starts(absu, sgn)

    def weights(i, j):
        flux = cum[j + 1] - cum[i]
        h = 0.5 * (j + 1 - i) * d
        return interval_weight(flux, h, l, H)

    _, picks = _dp(weights, starts, n)
    y0 = y[0] - 0.5 * d
    out = []
    for i, j in picks:
        a = y0 + ((i + shift) % n) * d
        flux = float(cum[j + 1] - cum[i])
        h = 0.5 * (j + 1 - i) * d
        out.append(Interval(float(a), float(a + 2 * h), int(sgn[i]), flux,
                            float(interval_weight(flux, h, l, H))))
    out.sort(key=lambda iv: iv.a)
    return out


def candidate_intervals(u: np.ndarray):
    """All admissible (i, j) sample runs."""
    u = np.asarray(u, float)
    starts = _valid_starts(np.abs(u), np.sign(u).astype(np.int64))
    return [(i, j) for j in range(u.size) if starts[j] >= 0
            for i in range(starts[j], j + 1)]


def _sample_profile(profile, H: float, n: int):
    if callable(profile):
        y = (np.arange(n) + 0.5) * H / n
        return y, np.asarray(profile(y), dtype=np.float64)
    u = np.asarray(profile, dtype=np.float64)
    return (np.arange(u.size) + 0.5) * H / u.size, u


# --------------------------------------------------------------- functionals


def shear_bound_functional(profile, kappa: float, v0: float, H: float, C: float = 1.0,
                           n: int = DEFAULT_SAMPLES, periodic: bool = True) -> BoundReport:
    """C (v0 + sum_j (1 + l/h_j)^-1 int_{I_j} |u| dy / H)."""
    y, u = _sample_profile(profile, H, n)
    l = kappa / v0
    flags = []
    if abs(u.mean()) > 1e-12 * max(1.0, np.abs(u).max()):
        flags.append("profile-not-mean-zero")
    ivs = select_intervals(y, u, l, H, periodic=periodic)
    total = sum(iv.weight for iv in ivs)
    unit = v0 + total
    return BoundReport(C * unit, unit, "shear",
                       {"intervals": [asdict(iv) for iv in ivs], "sum": total, "n": int(u.size)},
                       {"C": C}, flags)


def percolating_bound_functional(tubes, kappa: float, v0: float, H: float,
                                 C: float = 1.0) -> BoundReport:
    """C (v0 + sum_j (1 + l/h_j)^-1 flux_j / H)."""
    l = kappa / v0
    terms = [t.flux / H / (1.0 + l / t.h) for t in tubes.tubes]
    total = float(sum(terms))
    flags = []
    if any(not t.geometry_verified for t in tubes.tubes):
        flags.append("geometry-unverified")
    geom = {"tubes": [{"sign": t.sign, "psi_bottom": t.psi_bottom, "psi_top": t.psi_top,
                       "flux": t.flux, "h": t.h, "min_E1": t.min_E1,
                       "flux_density_ratio": t.flux_density_ratio} for t in tubes.tubes],
            "sum": total}
    unit = v0 + total
    return BoundReport(C * unit, unit, "percolating", geom, {"C": C}, flags)


def _validity_flags(kappa, v0, U, H):
    flags = []
    if U * H / kappa < 1:
        flags.append("Pe<1")
    if kappa / v0 > H:
        flags.append("l/H>1")
    return flags


def cellular_bound(kappa: float, v0: float, U: float, H: float,
                   C1: float = 1.0, C2: float = 1.0) -> BoundReport:
    """(C1 r^(1/2) + C2) v0 for r = tau_c/tau_u <= 1, else (C1 r^(1/5) + C2) v0."""
    r = kappa * U / (v0 ** 2 * H)
    if r <= 1.0:
        g, regime = math.sqrt(r), "cellular-sqrt"
    else:
        g, regime = r ** 0.2, "cellular-fifth"
    return BoundReport((C1 * g + C2) * v0, (g + 1.0) * v0, regime,
                       {"ratio": r, "h": boundary_layer_width(kappa, v0, U, H)[0]},
                       {"C1": C1, "C2": C2}, _validity_flags(kappa, v0, U, H))


def boundary_layer_width(kappa: float, v0: float, U: float, H: float):
    """(h, flags). h = sqrt(kappa H / U) / 6 when tau_c < tau_u, otherwise
    (kappa^3 H^2 / (U^2 v0))^(1/5) / 6 (ties take the second form)."""
    if not (kappa > 0 and v0 > 0 and U > 0 and H > 0):
        raise ValueError("boundary_layer_width needs positive inputs")
    r = kappa * U / (v0 ** 2 * H)
    if r < 1.0:
        h = math.sqrt(kappa * H / U) / 6.0
    else:
        h = (kappa ** 3 * H ** 2 / (U ** 2 * v0)) ** 0.2 / 6.0
    flags = _validity_flags(kappa, v0, U, H)
    if h > H / 6.0:
        flags.append("h>H/6")
    return h, flags


def floor_bound(f0: float, zeta: float, v0: float, C: float = 1.0) -> float:
    """C f0^(1/2) zeta v0."""
    if f0 < 0 or zeta < 0:
        raise ValueError("f0 and zeta must be nonnegative")
    return C * math.sqrt(f0) * zeta * v0


@dataclass(frozen=True)
class Calibration:
    c: float
    functional: float
    C_star: float
    flags: tuple = ()


def compare_to_simulation(c: float, report: BoundReport) -> Calibration:
    flags = []
    if not c > 0:
        flags.append("nonpositive-speed")
    C_star = max(c, 0.0) / report.value_unit if report.value_unit > 0 else math.nan
    return Calibration(float(c), report.value_unit, C_star, tuple(flags))


def implied_constant_spread(C_stars: Sequence[float]) -> float:
    """max / min of implied constants across a sweep (inf if any vanish)."""
    a = np.asarray(C_stars, float)
    return float(a.max() / a.min()) if a.min() > 0 else math.inf
