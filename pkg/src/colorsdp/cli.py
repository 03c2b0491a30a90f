"""Command-line entry point (``colorsdp``)."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .cones import probe_theorem32
from .graph import GraphError, generate, named_graph, oracle_3color, read_dimacs
from .harness import (
    HarnessOptions,
    decide,
    report_text,
    report_write,
    run_dual,
    run_identities,
    sweep,
)
from .solver import Status

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3

GLOBAL_DEFAULTS = {"tol_feas": 1e-8, "tol_gap": 1e-7, "bound": -100.0, "out": None,
                   "format": "text", "jobs": 1, "verbose": False}


def _add_globals(p, defaults):
    d = (lambda k: GLOBAL_DEFAULTS[k]) if defaults else (lambda k: argparse.SUPPRESS)
    p.add_argument("--tol-feas", type=float, default=d("tol_feas"),
                   help="primal feasibility tolerance (default 1e-8)")
    p.add_argument("--tol-gap", type=float, default=d("tol_gap"),
                   help="relative duality-gap tolerance (default 1e-7)")
    p.add_argument("--bound", type=float, default=d("bound"),
                   help="lower bound added to the objective (default -100)")
    p.add_argument("--out", default=d("out"), help="write the result to this file")
    p.add_argument("--format", choices=("text", "json", "csv"), default=d("format"))
    p.add_argument("--jobs", type=int, default=d("jobs"), help="worker processes for sweep")
    p.add_argument("--verbose", action="store_true", default=d("verbose"),
                   help="solver iteration log on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="colorsdp", description=__doc__, allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(parser, True)
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    _add_globals(common, False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decide", parents=[common], allow_abbrev=False, help="solve the colouring SDP for a graph")
    p.add_argument("file")
    p = sub.add_parser("oracle", parents=[common], allow_abbrev=False, help="exact 3-colouring count")
    p.add_argument("file")
    p = sub.add_parser("sweep", parents=[common], allow_abbrev=False, help="decide every small connected graph")
    p.add_argument("--n-max", type=int, required=True)
    p = sub.add_parser("identities", parents=[common], allow_abbrev=False, help="randomised identity checks")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p = sub.add_parser("dual", parents=[common], allow_abbrev=False, help="dual feasibility program")
    p.add_argument("file")

    p = sub.add_parser("cones", parents=[common], allow_abbrev=False, help="copositive probes")
    csub = p.add_subparsers(dest="cones_command", required=True)
    q = csub.add_parser("probe-thm32", parents=[common], allow_abbrev=False,
                        help="copositivity of the quadratic-form matrix for a D-graph")
    q.add_argument("--graph", required=True, help="k4, c5, ... or a DIMACS file")
    q.add_argument("--a", type=float, default=None, help="edge weight (default m)")
    q.add_argument("--b", type=float, default=-0.5)
    q.add_argument("--c3", type=float, default=10.0)
    q.add_argument("--c4", type=float, default=10.0)
    q.add_argument("--t", type=float, default=1.0)
    q.add_argument("--max-depth", type=int, default=None)

    p = sub.add_parser("gen", parents=[common], allow_abbrev=False, help="write a generated graph as DIMACS")
    p.add_argument("--kind", required=True,
                   choices=("complete", "cycle", "path", "petersen", "random"))
    p.add_argument("--k", type=int, help="size for complete/cycle/path")
    p.add_argument("--n", type=int, help="vertex count for random")
    p.add_argument("--p", type=float, default=0.3, help="edge probability for random")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _options(args) -> HarnessOptions:
    return HarnessOptions(feas_tol=args.tol_feas, gap_tol=args.tol_gap,
                          lower_bound=args.bound, verbose=args.verbose)


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def _emit(args, payload: dict, text: str) -> None:
    out = (json.dumps(_jsonable(payload), indent=1) + "\n") if args.format == "json" else text
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _load_graph(source: str):
    if os.path.exists(source):
        return read_dimacs(source)
    return named_graph(source)


def cmd_decide(args) -> int:
    g = read_dimacs(args.file)
    v = decide(g, _options(args))
    oracle = None if v.oracle is None else {"colorable": v.oracle.colorable, "count": v.oracle.count}
    payload = {"n": g.n, "m": g.m, "decision": v.decision, "objective": v.objective,
               "agree": v.agree, "oracle": oracle, "status": v.status,
               "iterations": v.iterations, "duality_gap": v.duality_gap,
               "min_eig": v.min_eig, "wall_time": v.wall_time}
    text = (f"decision   {v.decision.value}\nobjective  {v.objective:.12g}\n"
            f"status     {v.status.value} ({v.iterations} iterations)\n"
            f"oracle     {'n/a' if oracle is None else oracle['colorable']}\n"
            f"agreement  {v.agree.value}\n")
    _emit(args, payload, text)
    return EXIT_OK if v.status == Status.CONVERGED else EXIT_SOLVER


def cmd_oracle(args) -> int:
    g = read_dimacs(args.file)
    res = oracle_3color(g)
    witness = None if res.witness is None else list(res.witness.assignment)
    payload = {"n": g.n, "m": g.m, "colorable": res.colorable, "count": res.count,
               "witness": witness}
    text = f"colorable  {res.colorable}\ncount      {res.count}\n"
    if witness is not None:
        text += "witness    " + " ".join(res.witness.names()) + "\n"
    _emit(args, payload, text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    rows, summary = sweep(args.n_max, _options(args), jobs=max(1, args.jobs))
    fmt = "csv" if args.format == "csv" else "json"
    if args.out:
        report_write(rows, fmt, args.out)
    else:
        sys.stdout.write(report_text(rows, fmt))
    print(json.dumps(summary, indent=1), file=sys.stderr)
    if summary["disagreements"]:
        print(f"finding: {summary['disagreements']} row(s) disagree with the oracle",
              file=sys.stderr)
    return EXIT_OK


def cmd_identities(args) -> int:
    rep = run_identities(args.trials, args.seed)
    lines = [f"trials {rep['trials']} seed {rep['seed']}"]
    for name, vals in rep["families"].items():
        lines.append(f"{name:10s} " + " ".join(f"{k}={v:.3g}" for k, v in vals.items()))
    _emit(args, rep, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_dual(args) -> int:
    g = read_dimacs(args.file)
    rep = run_dual(g, _options(args))
    text = (f"tau        {rep.tau:.12g}\nstatus     {rep.status} ({rep.iterations} iterations)\n"
            f"verified   {rep.point_verified}\noracle     {rep.oracle_colorable}\n")
    if rep.coloring_tau is not None:
        text += f"coloring   checks_ok={rep.coloring_checks_ok} tau={rep.coloring_tau:.3g}\n"
    _emit(args, dataclasses.asdict(rep), text)
    return EXIT_OK if rep.status == Status.CONVERGED.value else EXIT_SOLVER


def cmd_cones(args) -> int:
    g = _load_graph(args.graph)
    rep = probe_theorem32(g, args.a, args.b, args.c3, args.c4, args.t, args.max_depth)
    v = rep.verdict
    detail = ""
    if v.kind == "NotCopositive":
        detail = f" value={v.value:.6g}"
    elif hasattr(v, "depth"):
        detail = f" depth={v.depth}"
    text = (f"verdict    {v.kind}{detail}\nobjective  {rep.objective:.12g}\n"
            f"predicted  {rep.predicted:.12g}\nresidual   {rep.residual:.3g}\n")
    _emit(args, {"verdict": v, "objective": rep.objective, "predicted": rep.predicted,
                 "residual": rep.residual, "params": rep.params}, text)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.kind in ("complete", "cycle", "path"):
        if args.k is None:
            raise GraphError(f"--k is required for kind {args.kind}")
        g = generate(args.kind, args.k)
    elif args.kind == "random":
        if args.n is None:
            raise GraphError("--n is required for kind random")
        g = generate("random", args.n, args.p, args.seed)
    else:
        g = generate(args.kind)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(g.to_dimacs())
    else:
        sys.stdout.write(g.to_dimacs())
    return EXIT_OK


COMMANDS = {"decide": cmd_decide, "oracle": cmd_oracle, "sweep": cmd_sweep,
            "identities": cmd_identities, "dual": cmd_dual, "cones": cmd_cones, "gen": cmd_gen}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (GraphError, ValueError, OSError) as exc:
        print(f"colorsdp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
