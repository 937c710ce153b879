"""Command-line entry point: simulate, sweep, bounds, geometry-check, fit."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from . import bounds as B
from . import experiment as E
from .reactions import make_reaction

log = logging.getLogger("frontlab")


def _cmd_simulate(args) -> int:
    out = E.simulate(args.config, args.out)
    rep = json.loads((out / "report.json").read_text())
    print(f"{out}: c = {rep['c']} +- {rep['c_stderr']}, certified = {rep['monotone_certified']}")
    return 0


def _cmd_sweep(args) -> int:
    summary = E.sweep(args.config, args.out, threads=args.threads, resume=args.resume)
    failed = E.sweep_failed(summary)
    print(f"{summary}: {len(failed)} failed point(s)")
    return 1 if failed else 0


def bounds_report(raw: dict) -> dict:
    """Every applicable bound for the flow and reaction of a run config."""
    cfg = E._merge(E.DEFAULTS, raw)
    errors = []
    flow = E._field(errors, "flow", lambda: E.build_flow(cfg["flow"]))
    reaction = E._field(errors, "reaction",
                        lambda: make_reaction(**{"kind": "kpp", **cfg.get("reaction", {})}))
    for key in ("kappa", "v0"):
        if not (isinstance(cfg[key], (int, float)) and cfg[key] > 0):
            errors.append(f"{key}: must be positive, got {cfg[key]!r}")
    if errors:
        raise E.ConfigError(errors)
    kappa, v0 = float(cfg["kappa"]), float(cfg["v0"])
    reports = E.bound_reports(flow, kappa, v0, cfg["bounds"])
    scale = flow.cell_scale or flow.H
    sc = B.laminar_scales(kappa, v0, flow.U, scale)
    out = {
        "bounds": {k: r.to_dict() for k, r in reports.items()},
        "floor_bound": B.floor_bound(reaction.f0, reaction.zeta, v0),
        "scales": {"l": sc.l, "Pe": sc.Pe, "tau_c": sc.tau_c,
                   "tau_u": sc.tau_u if math.isfinite(sc.tau_u) else None,
                   "ratio": sc.ratio, "flags": list(sc.flags)},
    }
    if flow.kind == "cellular" and flow.U > 0:
        h, flags = B.boundary_layer_width(kappa, v0, flow.U, scale)
        out["boundary_layer"] = {"h": h, "flags": flags}
    return E._jsonable(out)


def _cmd_bounds(args) -> int:
    text = json.dumps(bounds_report(E.load_json(args.config)), indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def geometry_report(H: float, n_samples: int = 10_000, seed: int = 0) -> dict:
    from .cell_geometry import CellChart, gradest_check, sample_Q, verify_procoord
    chart = CellChart(H)
    Q = sample_Q(chart, n_samples, seed)
    rep = verify_procoord(chart, min(n_samples, 4096), seed)
    rep["Q_samples"] = int(Q.size)
    rep["Q_sample_min"] = float(Q.min())
    rep["Q_sample_max"] = float(Q.max())
    rep["Q_within_bounds"] = bool(Q.min() >= math.exp(-1) - 1e-6 and Q.max() <= math.e + 1e-6)
    rep["gradest_min"] = gradest_check(H, n_samples, seed)
    rep["ok"] = bool(rep["finite"] and rep["Q_within_bounds"] and rep["gradest_min"] >= -1e-12)
    return rep


def _cmd_geometry(args) -> int:
    rep = geometry_report(args.H, args.samples, args.seed)
    text = json.dumps(E._jsonable(rep), indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if rep["ok"] else 1


def _cmd_fit(args) -> int:
    p, err, b = E.fit_scaling(args.summary, args.x, args.y, args.tail_points,
                              subtract_y_at_x0=args.subtract_x0)
    print(json.dumps({"exponent": p, "stderr": err, "intercept": b}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frontlab", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one configuration")
    p.add_argument("config")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--resume", action="store_true", help="skip rows already done")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bounds", help="evaluate the bound functionals for a config")
    p.add_argument("config")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("geometry-check", help="check cell coordinates at cell size H")
    p.add_argument("H", type=float)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=_cmd_geometry)

    p = sub.add_parser("fit", help="log-log exponent fit of a sweep summary")
    p.add_argument("summary")
    p.add_argument("--x", default="flow.U")
    p.add_argument("--y", default="c")
    p.add_argument("--tail-points", type=int, default=4)
    p.add_argument("--subtract-x0", action="store_true",
                   help="subtract y at x = 0 before fitting")
    p.set_defaults(func=_cmd_fit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except E.ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
