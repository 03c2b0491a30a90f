"""Decision procedure, sweeps, identity checks and report files."""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .encoder import (
    DEFAULT_LOWER_BOUND,
    NONNEGATIVE,
    assemble_matrix,
    build_dual_feasibility,
    build_primal,
    coloring_to_dual,
    dcoloring_matrix,
    identity_sum,
    kernel_check,
    permuted,
    validate_dual,
)
from .graph import (
    MAX_DEGREE,
    Coloring,
    Graph,
    OracleResult,
    canonical_mask,
    enumerate_graphs,
    oracle_3color,
)
from .solver import SolverOptions, Status, min_eigenvalue, solve_problem


class Decision(str, enum.Enum):
    THREE_COLORABLE = "ThreeColorable"
    NOT_THREE_COLORABLE = "NotThreeColorable"
    INCONCLUSIVE = "Inconclusive"


class Agreement(str, enum.Enum):
    AGREE = "Agree"
    DISAGREE = "Disagree"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class HarnessOptions:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-7
    max_iter: int = 200
    lower_bound: float = DEFAULT_LOWER_BOUND
    colorable_tol: float = 1e-5
    bound_threshold: float = -50.0
    oracle_cutoff: int = 12
    verbose: bool = False

    def __post_init__(self):
        if not self.colorable_tol < abs(self.bound_threshold):
            raise ValueError("classification bands overlap")

    def solver_options(self) -> SolverOptions:
        return SolverOptions(feas_tol=self.feas_tol, gap_tol=self.gap_tol,
                             max_iter=self.max_iter, verbose=self.verbose)


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    objective: float
    oracle: Optional[OracleResult]
    agree: Agreement
    status: Status
    iterations: int
    wall_time: float
    min_eig: float
    duality_gap: float


def classify(objective: float, status: Status, opts: HarnessOptions) -> Decision:
    if status != Status.CONVERGED:
        return Decision.INCONCLUSIVE
    if abs(objective) <= opts.colorable_tol:
        return Decision.THREE_COLORABLE
    if objective <= opts.bound_threshold:
        return Decision.NOT_THREE_COLORABLE
    return Decision.INCONCLUSIVE


def agreement(decision: Decision, oracle: Optional[OracleResult]) -> Agreement:
    if oracle is None or decision == Decision.INCONCLUSIVE:
        return Agreement.UNKNOWN
    says_colorable = decision == Decision.THREE_COLORABLE
    return Agreement.AGREE if says_colorable == oracle.colorable else Agreement.DISAGREE


def decide(g: Graph, opts: Optional[HarnessOptions] = None) -> Verdict:
    """Solve the colouring SDP with its lower bound and classify the optimum."""
    opts = opts or HarnessOptions()
    rep = solve_problem(build_primal(g, opts.lower_bound), opts.solver_options())
    decision = classify(rep.objective, rep.status, opts)
    oracle = oracle_3color(g) if g.n <= opts.oracle_cutoff else None
    return Verdict(decision, rep.objective, oracle, agreement(decision, oracle), rep.status,
                   rep.iterations, rep.wall_time, rep.min_eig, rep.duality_gap)


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class SweepRow:
    graph_id: int
    n: int
    m: int
    edge_bitmask: int
    oracle_colorable: Optional[bool]
    objective: float
    decision: str
    agree: str
    solver_status: str
    iterations: int
    wall_time: float


SWEEP_FIELDS = tuple(f.name for f in dataclasses.fields(SweepRow))


def _sweep_task(args):
    graph_id, n, edges, opts = args
    g = Graph(n, frozenset(edges))
    v = decide(g, opts)
    return SweepRow(graph_id, g.n, g.m, g.edge_bitmask(),
                    None if v.oracle is None else v.oracle.colorable,
                    float(v.objective), v.decision.value, v.agree.value, v.status.value,
                    int(v.iterations), float(v.wall_time))


def summarize(rows: Iterable[SweepRow]) -> dict:
    """Agreement counts split by oracle verdict, plus solver status counts."""
    split = {"oracle_colorable": Counter(), "oracle_not_colorable": Counter(),
             "oracle_unknown": Counter()}
    statuses = Counter()
    total = 0
    for r in rows:
        key = ("oracle_unknown" if r.oracle_colorable is None
               else "oracle_colorable" if r.oracle_colorable else "oracle_not_colorable")
        split[key][r.agree] += 1
        statuses[r.solver_status] += 1
        total += 1
    out = {k: {a.value: c[a.value] for a in Agreement} for k, c in split.items()}
    out["solver_status"] = {s.value: statuses[s.value] for s in Status}
    out["rows"] = total
    out["disagreements"] = sum(v[Agreement.DISAGREE.value] for k, v in out.items()
                               if k.startswith("oracle_"))
    return out


def sweep(n_max: int, opts: Optional[HarnessOptions] = None, jobs: int = 1):
    """One row per enumerated graph, in enumeration order, and a summary."""
    opts = opts or HarnessOptions()
    tasks = [(k, g.n, tuple(g.sorted_edges()), opts)
             for k, g in enumerate(enumerate_graphs(n_max))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks, chunksize=16))
    else:
        rows = [_sweep_task(t) for t in tasks]
    return rows, summarize(rows)


# --------------------------------------------------------------------------
# identity suite
# --------------------------------------------------------------------------
def random_colored_graph(rng: np.random.Generator, n_max: int = 8):
    """A random graph together with a proper colouring it was built around."""
    n = int(rng.integers(1, n_max + 1))
    colors = tuple(int(c) for c in rng.integers(0, 3, size=n))
    deg = [0] * n
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if colors[i] != colors[j] and rng.random() < 0.5 \
                    and deg[i] < MAX_DEGREE and deg[j] < MAX_DEGREE:
                edges.append((i, j))
                deg[i] += 1
                deg[j] += 1
    return Graph(n, frozenset(edges)), Coloring(colors)


def run_identities(trials: int, seed: int) -> dict:
    """Randomised checks of the colouring identities.

    Families: ``identity`` (permuted-colouring sum against the objective),
    ``dual`` (constructed dual matrix passes every check; eigenvalue floor),
    ``kernel`` (structural kernel residual) and ``cp_factor``
    (reconstruction of the colouring matrix from its factor).
    """
    report = {"trials": int(trials), "seed": int(seed), "families": {}}
    if trials <= 0:
        return report
    rng = np.random.default_rng(seed)
    ident = kern = recon = 0.0
    dual_fail = 0
    eig_floor = math.inf
    for _ in range(trials):
        g, col = random_colored_graph(rng)
        prob = build_primal(g)
        x = rng.uniform(-1.0, 1.0, size=prob.nvars)
        pc = permuted(col, g.n)
        lhs, f = identity_sum(prob, x, pc, g)
        ident = max(ident, abs(lhs - f))
        _, Z = coloring_to_dual(pc, g)
        checks = validate_dual(Z, g, tol=0.0, psd_tol=1e-9)
        dual_fail += not checks.ok
        eig_floor = min(eig_floor, min_eigenvalue(Z))
        kern = max(kern, kernel_check(Z, g.n, samples=10,
                                      seed=int(rng.integers(2**31)))["max_residual"])
        L, C = dcoloring_matrix(pc)
        recon = max(recon, float(np.abs(C.T @ C - L).max()))
    report["families"] = {
        "identity": {"max_residual": ident},
        "dual": {"failures": dual_fail, "min_eigenvalue": eig_floor},
        "kernel": {"max_residual": kern},
        "cp_factor": {"max_residual": recon},
    }
    return report


# --------------------------------------------------------------------------
# dual feasibility
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class DualRun:
    """Outcome of the dual feasibility solve.

    ``tau`` is the objective at the returned point.  ``point_verified``
    records an independent check that the point satisfies every constraint,
    so ``tau`` bounds the optimum from above even when the solver stopped
    before meeting its gap tolerance.
    """

    n: int
    m: int
    tau: float
    status: str
    iterations: int
    point_verified: bool
    point_min_eig: float
    oracle_colorable: Optional[bool]
    coloring_checks_ok: Optional[bool]
    coloring_tau: Optional[float]
    wall_time: float


def _verify_dual_point(prob, x, tol):
    M = assemble_matrix(prob, x)
    lam = min_eigenvalue(0.5 * (M + M.T), np.inf)
    ok = lam >= -tol
    for t, v in enumerate(prob.vars):
        if prob.sign.get(v) == NONNEGATIVE and x[t] < -tol:
            ok = False
    for const, coefs in prob.linear_rows:
        if const + sum(a * x[prob.index(v)] for v, a in coefs.items()) < -tol:
            ok = False
    return bool(ok), float(lam)


def run_dual(g: Graph, opts: Optional[HarnessOptions] = None, oracle: Optional[OracleResult] = None,
             _solved=None) -> DualRun:
    """Solve the dual feasibility program and cross-check with a colouring."""
    opts = opts or HarnessOptions()
    t0 = time.perf_counter()
    if _solved is None:
        prob = build_dual_feasibility(g)
        rep = solve_problem(prob, opts.solver_options())
        verified, lam = _verify_dual_point(prob, rep.x, opts.feas_tol)
        solved = (float(rep.objective), rep.status.value, int(rep.iterations), verified, lam)
    else:
        solved = _solved
    if oracle is None and g.n <= opts.oracle_cutoff:
        oracle = oracle_3color(g)
    checks_ok = coloring_tau = None
    if oracle is not None and oracle.colorable:
        _, Z = coloring_to_dual(permuted(oracle.witness, g.n), g)
        checks_ok = validate_dual(Z, g, tol=0.0, psd_tol=1e-9).ok
        coloring_tau = -min_eigenvalue(Z)
    return DualRun(g.n, g.m, solved[0], solved[1], solved[2], solved[3], solved[4],
                   None if oracle is None else oracle.colorable, checks_ok, coloring_tau,
                   time.perf_counter() - t0)


def dual_sweep(n_max: int, opts: Optional[HarnessOptions] = None):
    """:func:`run_dual` over every enumerated graph.

    The optimal value is invariant under vertex relabelling, so the
    feasibility program is solved once per isomorphism class; the colouring
    cross-check still runs on every labelled graph.
    """
    opts = opts or HarnessOptions()
    cache = {}
    out = []
    for g in enumerate_graphs(n_max):
        key = (g.n, canonical_mask(g))
        if key not in cache:
            prob = build_dual_feasibility(g)
            rep = solve_problem(prob, opts.solver_options())
            verified, lam = _verify_dual_point(prob, rep.x, opts.feas_tol)
            cache[key] = (float(rep.objective), rep.status.value, int(rep.iterations), verified, lam)
        out.append(run_dual(g, opts, _solved=cache[key]))
    return out


# --------------------------------------------------------------------------
# report files
# --------------------------------------------------------------------------
def _fmt_float(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None
    return float(f"{x:.12g}")


def _row_dict(row: SweepRow) -> dict:
    d = dataclasses.asdict(row)
    for k in ("objective", "wall_time"):
        d[k] = _fmt_float(d[k])
    return d


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def report_text(rows, fmt: str) -> str:
    """Sweep rows as JSON (array of objects) or CSV (header + rows)."""
    rows = list(rows)
    if fmt == "json":
        text = json.dumps([_row_dict(r) for r in rows], indent=1) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(SWEEP_FIELDS)
        for r in rows:
            d = _row_dict(r)
            w.writerow([_csv_cell(d[k]) for k in SWEEP_FIELDS])
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return text


def report_write(rows, fmt: str, path) -> None:
    text = report_text(rows, fmt)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror}") from exc


def _parse_bool(s):
    return None if s == "" else s == "True"


def report_read(fmt: str, path) -> list:
    """Inverse of :func:`report_write` (floats come back at 12 digits)."""
    with open(path, newline="") as fh:
        if fmt == "json":
            items = json.load(fh)
        elif fmt == "csv":
            items = []
            for d in csv.DictReader(fh):
                items.append({
                    "graph_id": int(d["graph_id"]), "n": int(d["n"]), "m": int(d["m"]),
                    "edge_bitmask": int(d["edge_bitmask"]),
                    "oracle_colorable": _parse_bool(d["oracle_colorable"]),
                    "objective": float(d["objective"]) if d["objective"] else math.nan,
                    "decision": d["decision"], "agree": d["agree"],
                    "solver_status": d["solver_status"], "iterations": int(d["iterations"]),
                    "wall_time": float(d["wall_time"]) if d["wall_time"] else math.nan,
                })
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    rows = []
    for d in items:
        for k in ("objective", "wall_time"):
            if d[k] is None:
                d[k] = math.nan
        rows.append(SweepRow(**d))
    return rows


def rounded(row: SweepRow) -> SweepRow:
    """The row as it reads back from a report file."""
    def r(x):
        y = _fmt_float(x)
        return math.nan if y is None else y

    return dataclasses.replace(row, objective=r(row.objective), wall_time=r(row.wall_time))
