"""Command line interface: ``qpforce <subcommand> --map FILE ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import cocycle as cc
from .classify import SCHEMA_VERSION, STAGES, THRESHOLDS, Budgets, classify, sweep, to_json
from .expression import UnboundNameError
from .models import GOLDEN, ConfigError, LiftedSkewMap, load_config, map_from_config
from .regularity import deviation_profile, orbit_seeds, regularity_diagnostic
from .rotation import (
    rational_relation_search,
    rotation_number_fibre_average,
    rotation_number_orbit,
    rotation_number_weighted,
)
from .semiconj import build_semiconjugacy, build_strip_family, save_semiconjugacy, semiconjugacy_defect
from .strips import GridGraph, invariance_residual, pullback_attractor, save_strip, strip_search
from .transitivity import box_transitivity_scan, save_hit_times

EXIT_CONFIG = 2


def _count(text: str) -> int:
    """Integers that may be written as ``1e5``."""
    value = float(text)
    if value != int(value) or value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(value)


def _pairs(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _scalar(v.strip())
    return out


def _scalar(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def _load_map(args) -> LiftedSkewMap:
    if args.cocycle:
        cfg = load_config(args.cocycle)
        if args.omega is not None:
            cfg["omega"] = args.omega
        return cc.projectivize(cc.cocycle_from_config(cfg))
    if args.map:
        return map_from_config(load_config(args.map), args.omega)
    raise ConfigError("this command needs --map FILE or --cocycle FILE")


def _rho(args, m: LiftedSkewMap) -> float:
    if getattr(args, "rho", None) is not None:
        return float(args.rho)
    return rotation_number_weighted(m, 0.0, 0.0, args.rho_n).value


def _emit(args, payload, rows=None) -> None:
    """Write the JSON payload (or ``rows`` as CSV) to ``--out`` or stdout."""
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        keys = list(rows[0]) if rows else []
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = to_json({"schema_version": SCHEMA_VERSION, **payload})
    if args.out and args.command not in ("graph", "strip", "semiconj"):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _map_info(m: LiftedSkewMap) -> dict:
    return {"label": m.label, "omega": m.omega}


# --------------------------------------------------------------------------
# subcommands


def cmd_rotnum(args):
    m = _load_map(args)
    if args.method == "orbit":
        est = rotation_number_orbit(m, args.theta, args.x, args.n)
    elif args.method == "weighted":
        est = rotation_number_weighted(m, args.theta, args.x, args.n)
    else:
        est = rotation_number_fibre_average(m, args.n, args.grid)
    d = est.to_dict()
    _emit(args, {"map": _map_info(m), "rotation": d}, [d])


def cmd_deps(args):
    if args.map or args.cocycle:
        m = _load_map(args)
        omega = m.omega
        rho = _rho(args, m)
    else:
        if args.rho is None:
            raise ConfigError("deps needs --rho or a map to estimate it from")
        omega = GOLDEN if args.omega is None else args.omega
        rho = args.rho
    rel = rational_relation_search(omega, rho, args.max_q, args.max_k, args.tol)
    d = {"omega": omega, "rho": rho, "relation": None if rel is None else rel.to_dict()}
    _emit(args, d, [{"omega": omega, "rho": rho, **(rel.to_dict() if rel else {"l": "", "k": "", "q": ""})}])


def cmd_deviations(args):
    m = _load_map(args)
    rho = _rho(args, m)
    v = regularity_diagnostic(m, rho, args.orbits, args.n, args.threshold)
    if args.trace:
        th, x = orbit_seeds(args.orbits)[0]
        p = deviation_profile(m, th, x, rho, args.n, decimate=args.decimate)
        np.savetxt(args.trace, np.array(p.trace), delimiter=",", header="n,D_n", comments="", fmt=["%d", "%.17g"])
    d = v.to_dict()
    _emit(args, {"map": _map_info(m), "rho": rho, "regularity": d}, [o for o in d["orbits"]])


def cmd_graph(args):
    m = _load_map(args)
    init = GridGraph(args.grid, np.full(args.grid, args.init))
    res = pullback_attractor(m, init, args.iterations, args.direction)
    resid, modulus = invariance_residual(m, res.graph)
    d = {**res.to_dict(), "invariance_residual": resid, "grid_modulus": modulus}
    if args.out:
        save_strip(res.strip, args.out, res.converged, {"invariance_residual": resid})
    _emit(args, {"map": _map_info(m), "graph": d})


def cmd_strip(args):
    m = _load_map(args)
    rho = _rho(args, m)
    rel = rational_relation_search(m.omega, rho, args.max_q, args.max_k, args.tol)
    if rel is None:
        raise ConfigError(f"no rational relation for rho={rho!r}; strip search needs one")
    C = args.c_bound
    if C is None:
        exact = -(rel.l + rel.k * m.omega) / rel.q
        C = regularity_diagnostic(m, exact, 8, args.regularity_n).C_estimate * 1.1 + 1e-9
    res = strip_search(m, rel, C, args.n, args.grid, max_residual=max(1e-6, args.tol))
    if args.out:
        save_strip(res.strip, args.out, None, {"contained": res.contained, "half_width": res.half_width})
    _emit(args, {"map": _map_info(m), "strip": res.to_dict()})


def cmd_semiconj(args):
    m = _load_map(args)
    rho = _rho(args, m)
    fam = build_strip_family(m, rho, args.r_grid, args.n, args.grid, args.lines, args.starts)
    H = build_semiconjugacy(fam, args.x_resolution)
    rep = semiconjugacy_defect(H, m, rho, report=True)
    d = {**rep.to_dict(), "ordered": fam.ordered, "monotone": H.monotone, "rho": rho}
    if args.out:
        save_semiconjugacy(H, args.out)
        Path(args.out).with_suffix(".json").write_text(to_json({"schema_version": SCHEMA_VERSION, **d}))
    _emit(args, {"map": _map_info(m), "semiconjugacy": d})


def cmd_lyapunov(args):
    if not args.cocycle:
        raise ConfigError("lyapunov needs --cocycle FILE")
    cfg = load_config(args.cocycle)
    if args.omega is not None:
        cfg["omega"] = args.omega
    c = cc.cocycle_from_config(cfg)
    est = cc.lyapunov_seeds(c, args.n, args.seeds, args.seed)
    d = {**est.to_dict(), "degree": c.degree, "det_defect": c.det_defect}
    _emit(args, {"cocycle": c.label, "lyapunov": d}, [d])


def cmd_transitive(args):
    m = _load_map(args)
    res = box_transitivity_scan(m, args.grid, args.samples, args.n)
    if args.hits:
        save_hit_times(res, args.hits)
    _emit(args, {"map": _map_info(m), "transitivity": res.to_dict()})


def _budgets(args) -> Budgets:
    values = {}
    if args.budgets:
        values.update(load_config(args.budgets))
    values.update(_pairs(args.budget))
    values["seed"] = args.seed
    return Budgets.from_mapping(values)


def cmd_classify(args):
    m = _load_map(args)
    rep = classify(m, _budgets(args), _pairs(args.threshold))
    _emit(args, rep.to_dict())


def cmd_sweep(args):
    ranges = {}
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"expected name=v1,v2,..., got {item!r}")
        k, v = item.split("=", 1)
        ranges[k.strip()] = [_scalar(t.strip()) for t in v.split(",") if t.strip()]
    omega = GOLDEN if args.omega is None else args.omega
    rows = sweep(args.family, ranges, args.stage, _pairs(args.base), omega, _budgets(args), _pairs(args.threshold))
    _emit(args, {"family": args.family, "stage": args.stage, "rows": rows}, rows)


# --------------------------------------------------------------------------
# parser


def _globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = p.add_argument_group("global options")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--map", metavar="FILE", default=d(None), help="map description (TOML or JSON)")
    src.add_argument("--cocycle", metavar="FILE", default=d(None), help="SL(2,R) cocycle description")
    g.add_argument("--omega", type=float, default=d(None), help="override the base rotation")
    g.add_argument("--seed", type=int, default=d(0))
    g.add_argument("--out", metavar="PATH", default=d(None))
    g.add_argument("--format", choices=("json", "csv"), default=d("json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpforce", description=__doc__)
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    def rho_opts(p):
        p.add_argument("--rho", type=float, help="rotation number (estimated from the map if omitted)")
        p.add_argument("--rho-n", type=_count, default=10**5, help="orbit length for estimating rho")

    def rel_opts(p):
        p.add_argument("--max-q", type=int, default=64)
        p.add_argument("--max-k", type=int, default=64)
        p.add_argument("--tol", type=float, default=1e-7)

    p = add("rotnum", cmd_rotnum, "fibrewise rotation number")
    p.add_argument("--n", type=_count, default=10**5)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--method", choices=("orbit", "weighted", "fibre-average"), default="orbit")
    p.add_argument("--fibre-avg", dest="method", action="store_const", const="fibre-average",
                   help="same as --method fibre-average")
    p.add_argument("--grid", type=_count, default=256)

    p = add("deps", cmd_deps, "search for l + k*omega + q*rho = 0")
    rho_opts(p)
    rel_opts(p)

    p = add("deviations", cmd_deviations, "deviation growth and the regularity verdict")
    rho_opts(p)
    p.add_argument("--n", type=_count, default=10**5)
    p.add_argument("--orbits", type=_count, default=8)
    p.add_argument("--threshold", type=float, default=THRESHOLDS["exponent_threshold"])
    p.add_argument("--trace", metavar="FILE.csv")
    p.add_argument("--decimate", type=_count, default=100)

    p = add("graph", cmd_graph, "pullback approximation of an invariant graph")
    p.add_argument("--grid", type=_count, default=1024)
    p.add_argument("--iterations", type=_count, default=200)
    p.add_argument("--direction", choices=("forward", "backward"), default="forward")
    p.add_argument("--init", type=float, default=0.0, help="constant initial graph")

    p = add("strip", cmd_strip, "invariant strip on the q-cover")
    rho_opts(p)
    rel_opts(p)
    p.add_argument("--grid", type=_count, default=256)
    p.add_argument("--n", type=_count, default=200)
    p.add_argument("--c-bound", type=float, help="deviation bound (estimated if omitted)")
    p.add_argument("--regularity-n", type=_count, default=10**4)

    p = add("semiconj", cmd_semiconj, "strip family and semi-conjugacy H")
    rho_opts(p)
    p.add_argument("--r-grid", type=_count, default=256)
    p.add_argument("--n", type=_count, default=10**4)
    p.add_argument("--grid", type=_count, default=256)
    p.add_argument("--x-resolution", type=_count, default=256)
    p.add_argument("--lines", type=_count, default=64)
    p.add_argument("--starts", type=_count, default=32)

    p = add("lyapunov", cmd_lyapunov, "top Lyapunov exponent of a cocycle")
    p.add_argument("--n", type=_count, default=10**5)
    p.add_argument("--seeds", type=_count, default=5)

    p = add("transitive", cmd_transitive, "box-to-box reachability scan")
    p.add_argument("--grid", type=_count, default=16)
    p.add_argument("--n", type=_count, default=10**5)
    p.add_argument("--samples", type=_count, default=9)
    p.add_argument("--hits", metavar="FILE.csv", help="write the hit-time matrix")

    for name, func, help_ in (("classify", cmd_classify, "full classification report"),
                              ("sweep", cmd_sweep, "run one stage over a parameter grid")):
        p = add(name, func, help_)
        p.add_argument("--budgets", metavar="FILE", help="budget overrides (TOML or JSON)")
        p.add_argument("--budget", action="append", metavar="KEY=VALUE")
        p.add_argument("--threshold", action="append", metavar="KEY=VALUE")
        if name == "sweep":
            p.add_argument("--family", required=True)
            p.add_argument("--stage", choices=STAGES, required=True)
            p.add_argument("--param", action="append", metavar="NAME=V1,V2,...")
            p.add_argument("--base", action="append", metavar="KEY=VALUE", help="fixed family parameters")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, UnboundNameError, json.JSONDecodeError) as exc:
        print(f"qpforce {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
