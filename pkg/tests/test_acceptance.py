"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (shown in the pytest terminal summary)
before asserting.  Run directly with ``python3 tests/test_acceptance.py``.
"""

import collections
import dataclasses
import itertools
import time

import numpy as np

from colorsdp.cones import NotCopositive, Copositive, is_copositive
from colorsdp.encoder import VarKind, build_primal, dcoloring_matrix, permuted, primal_var_counts
from colorsdp.graph import (
    Coloring,
    complete,
    cycle,
    enumerate_graphs,
    is_d_graph,
    oracle_3color,
    path,
    petersen,
    random_graph,
)
from colorsdp.harness import Decision, HarnessOptions, decide, dual_sweep, run_identities, sweep
from colorsdp.solver import Status, solve_problem

from test_solver import scalar_sdp, two_by_two_sdp


def timed(fn, *args, **kwargs):
    t = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t


def test_1_k2_reproduction(acceptance):
    decide(complete(1))  # pays one-off JIT compilation outside the timed call
    v, wall = timed(decide, complete(2))
    ok = v.decision == Decision.THREE_COLORABLE and abs(v.objective) <= 1e-6 and wall < 1.0
    acceptance(1, "K2 reproduction", ok,
               f"objective={v.objective:.3e} decision={v.decision.value} wall={wall:.3f}s")


def seeded_colourable_graphs(count=20):
    out = []
    for seed in itertools.count():
        g = random_graph(5 + seed % 8, 0.45, seed)
        if g.n <= 12 and g.max_degree() <= 4 and oracle_3color(g).colorable:
            out.append(g)
        if len(out) == count:
            return out


def test_2_proven_direction_suite(acceptance):
    graphs = [complete(1), complete(2), complete(3), path(3), cycle(4), cycle(5), cycle(7),
              petersen()] + seeded_colourable_graphs()
    t0 = time.perf_counter()
    worst, failures = 0.0, []
    for k, g in enumerate(graphs):
        assert oracle_3color(g).colorable
        v = decide(g)
        worst = max(worst, abs(v.objective))
        if v.decision != Decision.THREE_COLORABLE or abs(v.objective) > 1e-5:
            failures.append((k, v.decision.value, v.objective, v.status.value))
    wall = time.perf_counter() - t0
    ok = not failures and wall < 30.0
    acceptance(2, "proven-direction suite", ok,
               f"{len(graphs)} graphs, max|obj|={worst:.2e}, wall={wall:.1f}s, failures={failures}")


def test_3_k4_falsification(acceptance):
    g = complete(4)
    brute_non = not any(all(c[i] != c[j] for i, j in g.edges)
                        for c in itertools.product(range(3), repeat=4))
    v, wall = timed(decide, g)
    definitive = v.decision != Decision.INCONCLUSIVE
    flag_ok = (v.agree.value == "Agree") == (v.objective <= -50)
    ok = brute_non and is_d_graph(g) and definitive and flag_ok and wall < 5.0
    acceptance(3, "K4 falsification row", ok,
               f"objective={v.objective:.8f} decision={v.decision.value} agree={v.agree.value} "
               f"wall={wall:.2f}s")


def test_4_identity_suite(acceptance):
    rep, wall = timed(run_identities, 1000, 7)
    resid = rep["families"]["identity"]["max_residual"]
    ok = resid <= 1e-9 and wall < 10.0
    acceptance(4, "identity suite", ok, f"1000 trials, max residual={resid:.2e}, wall={wall:.2f}s")


def test_5_dual_sufficiency(acceptance):
    runs, wall = timed(dual_sweep, 6)
    colourable = [r for r in runs if r.oracle_colorable]
    checks = all(r.coloring_checks_ok and r.coloring_tau <= 1e-9 for r in colourable)
    taus = all(r.tau <= 1e-7 and r.point_verified for r in colourable)
    statuses = collections.Counter(r.status for r in colourable)
    ok = checks and taus and wall < 120.0
    acceptance(5, "dual sufficiency", ok,
               f"{len(colourable)} colourable graphs, max tau={max(r.tau for r in colourable):.2e} "
               f"at verified points, solver statuses={dict(statuses)}, wall={wall:.1f}s")


def test_6_sweep_integrity(acceptance):
    (rows, summ), wall = timed(sweep, 5)
    rows2, _ = sweep(5)
    strip = lambda rs: [dataclasses.replace(r, wall_time=0.0) for r in rs]
    deterministic = strip(rows) == strip(rows2)
    failures = summ["solver_status"]["NumericalFailure"]
    colourable_ok = all(r.decision == "ThreeColorable" for r in rows if r.oracle_colorable)
    ok = failures == 0 and deterministic and colourable_ok and wall < 300.0
    acceptance(6, "sweep integrity", ok,
               f"{len(rows)} rows, NumericalFailure={failures}, deterministic={deterministic}, "
               f"disagreements={summ['disagreements']}, wall={wall:.1f}s")


def test_7_solver_units(acceptance):
    a, b = solve_problem(scalar_sdp()), solve_problem(two_by_two_sdp())
    ok = (a.status == b.status == Status.CONVERGED
          and abs(a.objective) <= 1e-7 and abs(b.objective - 2.0) <= 1e-7)
    acceptance(7, "solver units", ok, f"objectives {a.objective:.2e} and {b.objective:.10f}")


def test_8_cones(acceptance):
    A = np.array([[1.0, -2.0], [-2.0, 1.0]])
    v = is_copositive(A)
    witness_ok = (isinstance(v, NotCopositive) and (v.witness >= 0).all()
                  and abs(v.witness.sum() - 1) <= 1e-12 and v.witness @ A @ v.witness < 0)
    rng = np.random.default_rng(8)
    psd = [is_copositive(G.T @ G) for G in rng.normal(size=(10, 5, 5))]
    nonneg = [is_copositive(B + B.T) for B in rng.uniform(0, 1, size=(10, 5, 5))]
    cop = all(isinstance(x, Copositive) for x in psd + nonneg)
    # D-colourings of K4: exactly one monochromatic edge
    recon = 0.0
    for col in itertools.product(range(3), repeat=4):
        c = Coloring(col)
        if len(c.monochromatic_edges(complete(4))) == 1:
            L, C = dcoloring_matrix(permuted(c))
            recon = max(recon, float(np.abs(C.T @ C - L).max()))
    ok = witness_ok and cop and recon <= 1e-12
    acceptance(8, "cones", ok, f"witness verified={witness_ok}, 20/20 copositive={cop}, "
               f"max reconstruction error={recon:.1e}")


def test_9_counting_invariants(acceptance):
    checked, bad = 0, []
    for g in enumerate_graphs(6):
        prob = build_primal(g)
        kinds = collections.Counter(v.kind for v in prob.vars)
        free = sum(c for k, c in kinds.items() if k != VarKind.NONADJ_P)
        nonpos = kinds[VarKind.NONADJ_P]
        pairs = g.n * (g.n - 1) // 2
        formula = (6 * g.n + 9 * g.m + (pairs - g.m) + 3 * g.n + 1, 9 * (pairs - g.m))
        if (free, nonpos) != formula or primal_var_counts(g.n, g.m) != formula:
            bad.append((g.n, g.sorted_edges()))
        checked += 1
    acceptance(9, "counting invariants", not bad, f"{checked} graphs checked, mismatches={len(bad)}")


if __name__ == "__main__":
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-q"]))
