"""Command-line front end: ingestion, configuration, JSON reports.

Exit codes: 0 success, 1 numeric diagnostic, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .adaptive import adaptive_ci, choose_grid
from .cbound import c_lower_bound
from .design import Dataset, FunctionSpace, TreatmentRule, preprocess, read_csv
from .errors import InputError, RdmonoError
from .estimator import split_sides
from .geometry import MonotoneSet, NormSpec
from .minimax import gain_curve, minimax_ci
from .simlab import DGPSpec, run_mc
from .variance import estimate_variance

SCHEMA_VERSION = 1


def _parse_c(text: str, allow_inf: bool) -> float:
    if text.lower() in ("inf", "infinity"):
        if not allow_inf:
            raise InputError("C = inf is only meaningful for the adaptive CI")
        return float("inf")
    v = float(text)
    if v <= 0:
        raise InputError("C must be positive")
    return v


def _parse_indices(text: str) -> frozenset:
    if not text:
        return frozenset()
    try:
        return frozenset(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise InputError(f"bad index list {text!r}") from exc


def _build_space(args, d: int, allow_inf: bool) -> FunctionSpace:
    mono = _parse_indices(args.monotone) if args.monotone is not None else None
    v = MonotoneSet(mono) if mono is not None else MonotoneSet.full(d)
    weights = ((float(w) for w in args.weights.split(","))
               if args.weights else (1.0,) * d)
    norm = NormSpec(args.norm, tuple(weights))
    c = _parse_c(args.c, allow_inf) if args.c is not None else 1.0
    return FunctionSpace(C=c, V=v, decreasing=_parse_indices(args.decreasing),
                         norm=norm)


def _load(args, allow_inf_c: bool):
    data = read_csv(args.data)
    space = _build_space(args, data.d, allow_inf_c)
    has_flags = bool(np.any(data.treated))
    rule = TreatmentRule("column" if has_flags else "MRA",
                         direction=args.rule_direction)
    cutoff = ([float(v) for v in args.cutoff.split(",")]
              if args.cutoff else None)
    data, space = preprocess(data, rule, space, cutoff)
    return data, space


def _prepared_sides(data, space, args):
    if args.variance == "known":
        if data.sigma is None:
            raise InputError("--variance known requires a sigma column")
        return split_sides(data, space), None, None
    ve = estimate_variance(data, args.nn_j)
    s2 = ve.machinery_sigma2(data.treated)
    return split_sides(data, space, s2, ve.stage2_sigma2), s2, ve.stage2_sigma2


def _report(args, command: str, result: dict, extra_config=None) -> dict:
    cfg = {
        "data": getattr(args, "data", None),
        "alpha": args.alpha,
        "variance": getattr(args, "variance", None),
        "seed": getattr(args, "seed", None),
    }
    if extra_config:
        cfg.update(extra_config)
    return {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "command": command,
        "config": cfg,
        "result": result,
    }


def cmd_minimax(args) -> dict:
    data, space = _load(args, allow_inf_c=False)
    sides, _, _ = _prepared_sides(data, space, args)
    if args.c_grid:
        grid = [float(v) for v in args.c_grid.split(",")]
        rows = []
        crossing = None
        for cc in grid:
            ci = minimax_ci(sides, space.with_c(cc), args.alpha)
            rows.append({"C": cc, **ci.to_json()})
            if crossing is None and ci.lower <= 0.0 <= ci.upper:
                crossing = cc
        return {"table": rows, "smallest_c_covering_zero": crossing,
                "space": space.to_json()}
    ci = minimax_ci(sides, space, args.alpha)
    return {**ci.to_json(), "space": space.to_json()}


def cmd_adaptive(args) -> dict:
    data, space = _load(args, allow_inf_c=True)
    _, s2, rep = _prepared_sides(data, space, args)
    if args.c_list:
        c_list = [float(v) for v in args.c_list.split(",")]
        grid_info = None
    else:
        if args.c_lo is None or args.c_hi is None:
            raise InputError("adaptive needs --c-list or both --c-lo and --c-hi")
        work = data if args.direction == "lower" else data.reflected()
        t, c = split_sides(work, space, s2, rep)
        sel = choose_grid(args.c_lo, args.c_hi, space.C, args.alpha, t, c,
                          epsilon=args.epsilon, j_cap=args.grid_cap,
                          mc_draws=args.mc_draws, seed=args.seed)
        c_list = sel.c_list
        grid_info = sel.to_json()
    ci = adaptive_ci(data, space, c_list, args.alpha, mc_draws=args.mc_draws,
                     seed=args.seed, direction=args.direction,
                     sigma2=s2, sigma2_report=rep)
    out = {**ci.to_json(), "space": space.to_json()}
    if grid_info:
        out["grid_selection"] = grid_info
    return out


def cmd_cbound(args) -> dict:
    data, space = _load(args, allow_inf_c=True)
    return c_lower_bound(data, space).to_json()


def cmd_gain(args) -> dict:
    data, space = _load(args, allow_inf_c=False)
    grid = [float(v) for v in args.c_grid.split(",")] if args.c_grid \
        else list(np.round(np.linspace(0.2, 3.0, 8), 6))
    if args.variance == "estimate":
        ve = estimate_variance(data, args.nn_j)
        data = Dataset(data.x, data.y, data.treated,
                       np.sqrt(ve.machinery_sigma2(data.treated)))
    return {"rows": gain_curve(data, space, grid, args.alpha)}


def cmd_grid(args) -> dict:
    data, space = _load(args, allow_inf_c=True)
    _, s2, rep = _prepared_sides(data, space, args)
    work = data if args.direction == "lower" else data.reflected()
    t, c = split_sides(work, space, s2, rep)
    if args.c_lo is None or args.c_hi is None:
        raise InputError("grid needs --c-lo and --c-hi")
    sel = choose_grid(args.c_lo, args.c_hi, space.C, args.alpha, t, c,
                      epsilon=args.epsilon, j_cap=args.grid_cap,
                      mc_draws=args.mc_draws, seed=args.seed)
    return sel.to_json()


def cmd_simulate(args) -> dict:
    with open(args.config) as fh:
        cfg = json.load(fh)
    spec = DGPSpec(**cfg.get("dgp", {}))
    res = run_mc(spec, cfg.get("method", "minimax"),
                 cfg.get("method_config", {}),
                 reps=cfg.get("reps", 100), seed=args.seed)
    return {"dgp": cfg.get("dgp", {}), "method": cfg.get("method", "minimax"),
            **res.to_json()}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rdmono",
        description="Honest CIs for sharp RD designs under monotone "
                    "Lipschitz smoothness",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        if data:
            p.add_argument("data", help="CSV with columns y, x1..xd, "
                                        "optional treated, sigma")
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--norm", choices=("wl1", "wl2", "wlinf"), default="wl1")
        p.add_argument("--weights", help="comma-separated norm weights")
        p.add_argument("--monotone", help="comma-separated 1-based indices; "
                                          "default: all coordinates")
        p.add_argument("--decreasing", default="",
                       help="subset of --monotone flagged decreasing")
        p.add_argument("--cutoff", help="comma-separated cutoff point")
        p.add_argument("--rule-direction", choices=("below-treated",
                       "above-treated"), default="below-treated")
        p.add_argument("--variance", choices=("known", "estimate"),
                       default="estimate")
        p.add_argument("--nn-j", type=int, default=3)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("minimax", help="fixed-length two-sided CI")
    common(p)
    p.add_argument("--c", required=True, help="Lipschitz constant")
    p.add_argument("--c-grid", help="comma-separated C values for a "
                                    "sensitivity table")
    p.set_defaults(fn=cmd_minimax)

    p = sub.add_parser("adaptive", help="adaptive one-sided CI")
    common(p)
    p.add_argument("--c", default="inf", help="big Lipschitz constant, may be inf")
    p.add_argument("--c-lo", type=float)
    p.add_argument("--c-hi", type=float)
    p.add_argument("--c-list", help="explicit comma-separated constant grid")
    p.add_argument("--direction", choices=("lower", "upper"), default="lower")
    p.add_argument("--mc-draws", type=int, default=100_000)
    p.add_argument("--epsilon", type=float, default=0.005)
    p.add_argument("--grid-cap", type=int, default=12)
    p.set_defaults(fn=cmd_adaptive)

    p = sub.add_parser("cbound", help="lower-bound estimate for C")
    common(p)
    p.add_argument("--c", default="inf")
    p.set_defaults(fn=cmd_cbound)

    p = sub.add_parser("gain", help="monotonicity length-gain table")
    common(p)
    p.add_argument("--c", default="1.0")
    p.add_argument("--c-grid", help="comma-separated C values")
    p.set_defaults(fn=cmd_gain)

    p = sub.add_parser("grid", help="constant-grid selection report")
    common(p)
    p.add_argument("--c", default="inf")
    p.add_argument("--c-lo", type=float)
    p.add_argument("--c-hi", type=float)
    p.add_argument("--direction", choices=("lower", "upper"), default="lower")
    p.add_argument("--mc-draws", type=int, default=100_000)
    p.add_argument("--epsilon", type=float, default=0.005)
    p.add_argument("--grid-cap", type=int, default=12)
    p.set_defaults(fn=cmd_grid)

    p = sub.add_parser("simulate", help="Monte Carlo coverage/length study")
    common(p, data=False)
    p.add_argument("config", help="JSON file with dgp, method, reps")
    p.set_defaults(fn=cmd_simulate)

    return ap


def _emit(report: dict, args):
    if getattr(args, "format", "json") == "csv" and "rows" in report.get("result", {}):
        import csv as _csv
        rows = report["result"]["rows"]
        writer_target = open(args.out, "w", newline="") if args.out else sys.stdout
        w = _csv.DictWriter(writer_target, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)
        if args.out:
            writer_target.close()
        return
    text = json.dumps(report, indent=2, default=_json_default)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and np.isinf(obj):
        return "inf"
    raise TypeError(f"not JSON serializable: {type(obj)}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.fn(args)
    except InputError as exc:
        _emit({"schema_version": SCHEMA_VERSION, "error": {"kind": "input",
              "message": str(exc)}}, args)
        return 2
    except RdmonoError as exc:
        _emit({"schema_version": SCHEMA_VERSION, "error": {"kind": "numeric",
              "message": str(exc)}}, args)
        return 1
    _emit(_report(args, args.command, result), args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
