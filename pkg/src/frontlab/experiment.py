"""Run configuration, persistence, parameter sweeps and scaling fits."""
from __future__ import annotations

import copy
import csv
import io
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from . import bounds as B
from .diagnostics import DiagnosticsRecord, time_average_V, front_speed
from .flows import (FlowSpec, cellular_flow, perturbed_shear_flow, shear_flow,
                    sine_shear_flow, tube_family_for_flow, zero_flow)
from .grid import Grid, TemperatureField, build_grid
from .reactions import make_reaction
from .solver import (SolverConfig, check_subsolution, is_certified,
                     make_front_initial_data, run)

log = logging.getLogger(__name__)

SNAP_BLOCK = 64


class ConfigError(ValueError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.errors))


# ------------------------------------------------------------------ config

DEFAULTS = {
    "kappa": 1.0,
    "v0": 1.0,
    "cfl_safety": 0.9,
    "t_end": 50.0,
    "sample_every": 0.5,
    "lambda": None,
    "x_front": None,
    "seed": 0,
    "tail_fraction": 0.5,
    "shift_threshold": 1e-6,
    "bounds": {"C": 1.0, "C1": 1.0, "C2": 1.0, "n_levels": 512},
}


@dataclass
class RunConfig:
    raw: dict
    grid: Grid
    flow: FlowSpec
    solver: SolverConfig
    t_end: float
    sample_every: float
    lam: float
    x_front: float
    seed: int
    tail_fraction: float
    shift_threshold: float
    bounds: dict
    output_dir: Optional[str] = None


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def build_flow(spec: dict) -> FlowSpec:
    spec = dict(spec)
    kind = spec.pop("kind", "zero")
    if kind == "zero":
        return zero_flow(float(spec["H"]))
    if kind == "sine_shear":
        return sine_shear_flow(float(spec["U"]), float(spec["H"]), int(spec.get("modes", 1)))
    if kind == "shear":
        if "profile" not in spec:
            raise ValueError("flow.profile (list of samples) is required for kind 'shear'")
        return shear_flow(np.asarray(spec["profile"], float), float(spec["H"]))
    if kind == "cellular":
        return cellular_flow(float(spec["U"]), float(spec["H"]))
    if kind == "perturbed_shear":
        return perturbed_shear_flow(float(spec["U"]), float(spec["H"]), float(spec.get("eps", 0.5)))
    raise ValueError(f"unknown flow kind {kind!r}")


def _field(errors, name, fn):
    try:
        return fn()
    except (ValueError, KeyError, TypeError) as exc:
        msg = exc.args[0] if exc.args else repr(exc)
        errors.append(f"{name}: {msg if not isinstance(exc, KeyError) else 'missing ' + str(msg)}")
        return None


def parse_run_config(raw: dict, output_dir: Optional[str] = None) -> RunConfig:
    """Validate everything up front and report all problems at once."""
    cfg = _merge(DEFAULTS, raw)
    errors: List[str] = []
    flow = _field(errors, "flow", lambda: build_flow(cfg["flow"]))
    reaction = _field(errors, "reaction",
                      lambda: make_reaction(**{"kind": "kpp", **cfg.get("reaction", {})}))
    g = cfg.get("grid", {})
    grid = None
    if flow is not None:
        grid = _field(errors, "grid", lambda: build_grid(
            flow.H, g["ny"], g.get("x_lo", 0.0), g["x_hi"], g["nx"], g.get("bc_y", "neumann")))
    for key, ok, what in (("kappa", lambda v: v > 0, "positive"),
                          ("v0", lambda v: v > 0, "positive"),
                          ("cfl_safety", lambda v: 0 < v <= 1, "in (0, 1]")):
        v = cfg[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not ok(v):
            errors.append(f"{key}: must be {what}, got {v!r}")
    solver = None
    if flow is not None and reaction is not None and not errors:
        solver = _field(errors, "solver", lambda: SolverConfig(
            float(cfg["kappa"]), float(cfg["v0"]), reaction, flow, float(cfg["cfl_safety"])))
    for key in ("t_end", "sample_every"):
        if not isinstance(cfg[key], (int, float)) or cfg[key] < 0 or (key == "sample_every" and cfg[key] == 0):
            errors.append(f"{key}: must be a positive number, got {cfg[key]!r}")
    lam = cfg["lambda"]
    if lam is None and solver is not None:
        lam = solver.v0 / solver.kappa
    x_front = cfg["x_front"]
    if x_front is None and grid is not None:
        x_front = grid.x_lo + 0.2 * grid.length
    if grid is not None and lam is not None:
        _field(errors, "x_front", lambda: make_front_initial_data(grid, float(lam), float(x_front)))
    if not 0 < cfg["tail_fraction"] <= 1:
        errors.append("tail_fraction: must lie in (0, 1]")
    if errors:
        raise ConfigError(errors)
    return RunConfig(cfg, grid, flow, solver, float(cfg["t_end"]), float(cfg["sample_every"]),
                     float(lam), float(x_front), int(cfg["seed"]), float(cfg["tail_fraction"]),
                     float(cfg["shift_threshold"]), cfg["bounds"],
                     output_dir or cfg.get("output_dir"))


def load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ------------------------------------------------------------------ files


def write_snapshot(path, fld: TemperatureField):
    """JSON header padded with spaces to a multiple of 64 bytes (ending in a
    newline), then the (nx, ny) values as row-major little-endian float64."""
    g = fld.grid
    head = json.dumps({"nx": g.nx, "ny": g.ny, "x_lo": g.x_lo, "dx": g.dx, "dy": g.dy,
                       "t": fld.t, "window_offset": fld.window_offset,
                       "H": g.H, "bc_y": g.bc_y.value}, sort_keys=True).encode()
    size = SNAP_BLOCK * math.ceil((len(head) + 1) / SNAP_BLOCK)
    head = head + b" " * (size - len(head) - 1) + b"\n"
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(fld.values, dtype="<f8").tobytes())


def read_snapshot(path) -> TemperatureField:
    with open(path, "rb") as fh:
        head = b""
        while not head.endswith(b"\n"):
            block = fh.read(SNAP_BLOCK)
            if len(block) < SNAP_BLOCK:
                raise ValueError("truncated snapshot header")
            head += block
        meta = json.loads(head.decode())
        data = np.frombuffer(fh.read(), dtype="<f8")
    nx, ny = meta["nx"], meta["ny"]
    if data.size != nx * ny:
        raise ValueError(f"snapshot holds {data.size} values, header says {nx}x{ny}")
    grid = build_grid(meta["H"], ny, meta["x_lo"], meta["x_lo"] + nx * meta["dx"], nx,
                      meta.get("bc_y", "neumann"))
    return TemperatureField(grid, data.reshape(nx, ny).copy(), t=meta["t"],
                            window_offset=meta["window_offset"])


def records_to_csv(records: Sequence[DiagnosticsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    cols = DiagnosticsRecord.columns()
    w.writerow(cols)
    for r in records:
        w.writerow([_fmt(getattr(r, c)) for c in cols])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


# ------------------------------------------------------------------ reports


def bound_reports(fl: FlowSpec, kappa: float, v0: float,
                  bc: Optional[dict] = None) -> Dict[str, B.BoundReport]:
    """Bound functionals that apply to the flow: shear and percolating for
    shear flows, cellular for the cellular flow, percolating otherwise."""
    bc = {**DEFAULTS["bounds"], **(bc or {})}
    out = {}
    if fl.kind == "shear":
        prof = fl.params.get("profile")
        if prof is None:
            prof = lambda y: np.zeros_like(y)
        out["shear"] = B.shear_bound_functional(prof, kappa, v0, fl.H, C=bc["C"])
        out["percolating"] = B.percolating_bound_functional(
            tube_family_for_flow(fl, int(bc["n_levels"]), nx_period=8, ny_nodes=257),
            kappa, v0, fl.H, C=bc["C"])
    elif fl.kind == "cellular":
        out["cellular"] = B.cellular_bound(kappa, v0, fl.U, fl.cell_scale,
                                           C1=bc["C1"], C2=bc["C2"])
    else:
        out["percolating"] = B.percolating_bound_functional(
            tube_family_for_flow(fl, int(bc["n_levels"])), kappa, v0, fl.H, C=bc["C"])
    return out


PRIMARY_ORDER = ("shear", "cellular", "percolating")


def primary_bound(reports: Dict[str, Any]):
    """The bound used for calibration: shear, else cellular, else percolating."""
    for key in PRIMARY_ORDER:
        if key in reports:
            return reports[key]
    raise KeyError("no bound report")


def numerical_diffusion_ratio(rc: RunConfig) -> float:
    """Upwind numerical diffusion max|u| dx / 2 relative to kappa."""
    return rc.flow.max_speed * rc.grid.dx / (2.0 * rc.solver.kappa)


def simulate_config(rc: RunConfig, out_dir) -> dict:
    """Run one configuration and write timeseries.csv, final.snap, report.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    s = rc.solver
    T0 = make_front_initial_data(rc.grid, rc.lam, rc.x_front)
    min_res = check_subsolution(T0, s)
    records, final = run(s, rc.grid, T0, rc.t_end, rc.sample_every,
                         shift_threshold=rc.shift_threshold)
    (out / "timeseries.csv").write_text(records_to_csv(records), encoding="utf-8", newline="")
    write_snapshot(out / "final.snap", final)

    try:
        c, c_err = front_speed(records, rc.tail_fraction)
    except ValueError:
        c, c_err = math.nan, math.nan
    n_tail = max(1, int(math.ceil(rc.tail_fraction * len(records))))
    tail = records[-n_tail:]
    V_tail = time_average_V(tail) if len(tail) > 1 else records[-1].V_reaction
    reports = bound_reports(rc.flow, s.kappa, s.v0, rc.bounds)
    calib = {k: B.compare_to_simulation(c if math.isfinite(c) else 0.0, r).__dict__
             for k, r in reports.items()}
    scales = B.laminar_scales(s.kappa, s.v0, rc.flow.U, rc.flow.cell_scale or rc.flow.H)
    floor = B.floor_bound(s.reaction.f0, s.reaction.zeta, s.v0)
    flags = []
    if math.isfinite(c) and c < 0.5 * s.v0:
        flags.append("speed below 0.5 v0 floor")
    report = {
        "c": c,
        "c_stderr": c_err,
        "V_tail": V_tail,
        "avg_V": records[-1].avg_V,
        "n_samples": len(records),
        "n_steps": int(final.meta.get("n_steps", 0)),
        "subsolution_min_residual": min_res,
        "monotone_certified": bool(is_certified(min_res, s)),
        "numerical_diffusion_ratio": numerical_diffusion_ratio(rc),
        "scales": {"l": scales.l, "Pe": scales.Pe, "tau_c": scales.tau_c,
                   "tau_u": scales.tau_u if math.isfinite(scales.tau_u) else None,
                   "ratio": scales.ratio, "flags": list(scales.flags)},
        "reaction": {"kind": s.reaction.kind, "theta1": s.reaction.theta1,
                     "theta4": s.reaction.theta4, "f0": s.reaction.f0,
                     "zeta": s.reaction.zeta, "Lf": s.reaction.Lf},
        "floor_bound": floor,
        "bounds": {k: r.to_dict() for k, r in reports.items()},
        "calibration": calib,
        "flags": flags,
        "config": rc.raw,
    }
    (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True),
                                     encoding="utf-8")
    return report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def simulate(config_path, out: Optional[str] = None) -> Path:
    raw = load_json(config_path)
    rc = parse_run_config(raw)
    out_dir = Path(out or rc.output_dir or Path(config_path).with_suffix(""))
    simulate_config(rc, out_dir)
    return out_dir


# ------------------------------------------------------------------ sweeps


def _get_path(d: dict, dotted: str):
    cur = d
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise KeyError(dotted)
        cur = cur[part]
    return cur


def _set_path(d: dict, dotted: str, value):
    parts = dotted.split(".")
    cur = d
    for part in parts[:-1]:
        cur = cur.setdefault(part, {})
    cur[parts[-1]] = value


def _axis_values(ax: dict) -> list:
    """Explicit `values`, or `num` points from `start` to `stop` with
    `spacing` linear or geometric; `prepend` adds leading values (e.g. 0)."""
    extra = list(ax.get("prepend", []))
    if "values" in ax:
        return extra + list(ax["values"])
    n = int(ax["num"])
    if ax.get("spacing", "linear") == "geometric":
        return extra + [float(v) for v in np.geomspace(ax["start"], ax["stop"], n)]
    return extra + [float(v) for v in np.linspace(ax["start"], ax["stop"], n)]


@dataclass
class SweepConfig:
    template: dict
    names: List[str]
    points: List[Dict[str, Any]]
    t_end_rule: Optional[dict] = None
    baseline: Optional[dict] = None


def parse_sweep_config(raw: dict) -> SweepConfig:
    """Sweep over one or two dotted parameter paths of the template (grid
    product), or over an explicit list of point overrides."""
    tmpl = raw.get("template")
    if not isinstance(tmpl, dict):
        raise ConfigError(["template: a run configuration object is required"])
    errors = []
    points: List[Dict[str, Any]] = []
    names: List[str] = []
    if "points" in raw:
        points = [dict(p) for p in raw["points"]]
        names = sorted({k for p in points for k in p})
    else:
        axes = raw.get("sweep", [])
        if not 1 <= len(axes) <= 2:
            errors.append("sweep: give one or two swept parameters")
        else:
            names = [ax["name"] for ax in axes]
            values = [_axis_values(ax) for ax in axes]
            points = [dict(zip(names, combo)) for combo in itertools.product(*values)]
    merged = _merge(DEFAULTS, tmpl)
    for name in names:
        try:
            _get_path(merged, name)
        except KeyError:
            errors.append(f"sweep: parameter {name!r} does not exist in the template")
    if errors:
        raise ConfigError(errors)
    return SweepConfig(tmpl, names, points, raw.get("t_end_rule"))


def point_config(sc: SweepConfig, point: Dict[str, Any]) -> dict:
    cfg = copy.deepcopy(sc.template)
    for name, value in point.items():
        _set_path(cfg, name, value)
    rule = sc.t_end_rule
    if rule:
        # t_end proportional to window length / expected speed, capped
        rc = parse_run_config(cfg)
        s = rc.solver
        expected = primary_bound(bound_reports(rc.flow, s.kappa, s.v0, rc.bounds)).value_unit
        t = float(rule.get("factor", 1.0)) * rc.grid.length / expected
        cfg["t_end"] = float(min(max(t, rule.get("min", 0.0)), rule.get("cap", math.inf)))
    return cfg


SUMMARY_BASE = ["point", "status", "c", "c_stderr", "V_tail", "functional", "C_star",
                "Pe", "tau_ratio", "num_diff_ratio", "t_end", "error"]


def _run_point(args):
    k, cfg, out_dir = args
    row = {"point": k}
    try:
        rc = parse_run_config(cfg)
        rep = simulate_config(rc, out_dir)
        cal = primary_bound(rep["calibration"])
        row.update(status="ok", c=rep["c"], c_stderr=rep["c_stderr"], V_tail=rep["V_tail"],
                   functional=cal["functional"], C_star=cal["C_star"],
                   Pe=rep["scales"]["Pe"], tau_ratio=rep["scales"]["ratio"],
                   num_diff_ratio=rep["numerical_diffusion_ratio"], t_end=rc.t_end, error="")
    except Exception as exc:            # recorded; the sweep carries on
        log.exception("sweep point %d failed", k)
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return k, row


def _read_summary(path: Path) -> Dict[int, dict]:
    if not path.exists():
        return {}
    with open(path, newline="", encoding="utf-8") as fh:
        return {int(r["point"]): r for r in csv.DictReader(fh)}


def _write_summary(path: Path, names: List[str], points, rows: Dict[int, dict]):
    cols = ["point"] + names + SUMMARY_BASE[1:]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(cols)
    for k in sorted(rows):
        r = dict(rows[k])
        for name in names:
            r.setdefault(name, points[k].get(name, ""))
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    tmp = path.with_suffix(".tmp")
    tmp.write_text(buf.getvalue(), encoding="utf-8", newline="")
    os.replace(tmp, path)


def sweep(config_path, out: Optional[str] = None, threads: int = 1,
          resume: bool = False) -> Path:
    """Run every sweep point; returns the path of summary.csv."""
    raw = load_json(config_path)
    sc = parse_sweep_config(raw)
    out_dir = Path(out or raw.get("output_dir") or Path(config_path).with_suffix(""))
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = out_dir / "summary.csv"
    rows: Dict[int, dict] = {}
    if resume:
        rows = {k: r for k, r in _read_summary(summary).items() if r.get("status") == "ok"}
    jobs = []
    for k, point in enumerate(sc.points):
        if k in rows:
            continue
        try:
            cfg = point_config(sc, point)
        except Exception as exc:
            rows[k] = {"point": k, "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
            continue
        jobs.append((k, cfg, str(out_dir / f"point_{k:03d}")))
    log.info("sweep: %d points, %d to run", len(sc.points), len(jobs))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_point, j) for j in jobs]
            for fut in as_completed(futures):
                k, row = fut.result()
                rows[k] = row
                _write_summary(summary, sc.names, sc.points, rows)
    else:
        for j in jobs:
            k, row = _run_point(j)
            rows[k] = row
            _write_summary(summary, sc.names, sc.points, rows)
    _write_summary(summary, sc.names, sc.points, rows)
    return summary


def sweep_failed(summary_path) -> List[int]:
    return [k for k, r in _read_summary(Path(summary_path)).items() if r.get("status") != "ok"]


# ------------------------------------------------------------------ fits


def fit_scaling(summary_path, x_col: str, y_col: str, tail_points: int,
                subtract_y_at_x0: bool = False):
    """Least-squares slope of log y against log x over the tail_points rows
    with the largest x. Returns (exponent, stderr, intercept)."""
    with open(summary_path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.DictReader(fh) if r.get("status", "ok") == "ok"]
    x = np.array([float(r[x_col]) for r in rows])
    y = np.array([float(r[y_col]) for r in rows])
    if subtract_y_at_x0:
        zero = np.nonzero(x == 0)[0]
        if zero.size == 0:
            raise ValueError(f"no row with {x_col} = 0 to subtract")
        y = y - y[zero[0]]
    return fit_loglog(x, y, tail_points)


def fit_loglog(x, y, tail_points: int):
    x, y = np.asarray(x, float), np.asarray(y, float)
    if tail_points < 3:
        raise ValueError("need at least 3 tail points")
    order = np.argsort(x)[::-1][:tail_points]
    if order.size < 3:
        raise ValueError("need at least 3 tail points")
    xs, ys = x[order], y[order]
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs positive x and y")
    fit = stats.linregress(np.log(xs), np.log(ys))
    return float(fit.slope), float(fit.stderr), float(fit.intercept)
