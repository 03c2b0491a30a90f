import csv
import dataclasses
import json
import math

import numpy as np
import pytest

from colorsdp.graph import Graph, complete, cycle, oracle_3color, path, random_graph
from colorsdp.harness import (
    SWEEP_FIELDS,
    Agreement,
    Decision,
    HarnessOptions,
    SweepRow,
    agreement,
    classify,
    decide,
    random_colored_graph,
    report_read,
    report_text,
    report_write,
    rounded,
    run_dual,
    run_identities,
    summarize,
    sweep,
)
from colorsdp.solver import Status


def stable(row):
    return dataclasses.replace(row, wall_time=0.0)


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------
def test_classification_bands():
    o = HarnessOptions()
    ok = Status.CONVERGED
    assert classify(0.0, ok, o) == Decision.THREE_COLORABLE
    assert classify(-1e-5, ok, o) == Decision.THREE_COLORABLE
    assert classify(2e-5, ok, o) == Decision.INCONCLUSIVE
    assert classify(-50.0, ok, o) == Decision.NOT_THREE_COLORABLE
    assert classify(-49.9, ok, o) == Decision.INCONCLUSIVE
    assert classify(-100.0, Status.ITERATION_LIMIT, o) == Decision.INCONCLUSIVE
    assert classify(0.0, Status.NUMERICAL_FAILURE, o) == Decision.INCONCLUSIVE


def test_overlapping_bands_rejected():
    with pytest.raises(ValueError):
        HarnessOptions(colorable_tol=60.0)


def test_agreement_table():
    col, non = oracle_3color(complete(3)), oracle_3color(complete(4))
    assert agreement(Decision.THREE_COLORABLE, col) == Agreement.AGREE
    assert agreement(Decision.NOT_THREE_COLORABLE, non) == Agreement.AGREE
    assert agreement(Decision.NOT_THREE_COLORABLE, col) == Agreement.DISAGREE
    assert agreement(Decision.THREE_COLORABLE, non) == Agreement.DISAGREE
    assert agreement(Decision.INCONCLUSIVE, col) == Agreement.UNKNOWN
    assert agreement(Decision.THREE_COLORABLE, None) == Agreement.UNKNOWN


# --------------------------------------------------------------------------
# decide
# --------------------------------------------------------------------------
def test_decide_k2():
    v = decide(complete(2))
    assert v.decision == Decision.THREE_COLORABLE
    assert abs(v.objective) <= 1e-6
    assert v.agree == Agreement.AGREE


def test_decide_k1():
    v = decide(complete(1))
    assert v.decision == Decision.THREE_COLORABLE and abs(v.objective) <= 1e-6


def test_decide_k4_records_outcome():
    v = decide(complete(4))
    assert v.oracle is not None and not v.oracle.colorable
    assert v.status == Status.CONVERGED
    assert v.decision != Decision.INCONCLUSIVE
    assert (v.agree == Agreement.AGREE) == (v.objective <= -50)


def test_verdict_invariants_on_random_graphs():
    o = HarnessOptions()
    for seed in range(4):
        v = decide(random_graph(8, 0.45, seed), o)
        if v.decision == Decision.THREE_COLORABLE:
            assert abs(v.objective) <= o.colorable_tol
        if v.decision == Decision.NOT_THREE_COLORABLE:
            assert v.objective <= o.bound_threshold
        if v.agree == Agreement.DISAGREE:
            assert (v.decision == Decision.THREE_COLORABLE) != v.oracle.colorable


def test_decide_skips_oracle_above_cutoff():
    v = decide(path(4), HarnessOptions(oracle_cutoff=3))
    assert v.oracle is None and v.agree == Agreement.UNKNOWN


def test_solver_failure_maps_to_inconclusive():
    v = decide(cycle(5), HarnessOptions(max_iter=2))
    assert v.status == Status.ITERATION_LIMIT
    assert v.decision == Decision.INCONCLUSIVE


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------
def test_sweep_n2():
    rows, summ = sweep(2)
    assert len(rows) == 1
    assert rows[0].agree == "Agree" and rows[0].n == 2 and rows[0].m == 1
    assert summ["rows"] == 1 and summ["disagreements"] == 0


def test_sweep_n3():
    rows, _ = sweep(3)
    assert len(rows) == 5
    assert all(r.oracle_colorable for r in rows)
    assert all(r.decision == "ThreeColorable" for r in rows)
    assert [r.graph_id for r in rows] == list(range(5))


def test_sweep_n4_has_one_k4_row():
    rows, summ = sweep(4)
    k4 = complete(4).edge_bitmask()
    bad = [r for r in rows if r.oracle_colorable is False]
    assert len(bad) == 1 and bad[0].n == 4 and bad[0].edge_bitmask == k4
    assert summ["oracle_not_colorable"]["Agree"] + summ["oracle_not_colorable"]["Disagree"] == 1
    assert summ["solver_status"]["Converged"] == len(rows)


def test_sweep_parallel_matches_serial():
    serial, s1 = sweep(4)
    parallel, s2 = sweep(4, jobs=2)
    assert [stable(r) for r in serial] == [stable(r) for r in parallel]
    assert s1 == s2


def test_summarize_counts():
    mk = lambda col, agree, st: SweepRow(0, 2, 1, 1, col, 0.0, "x", agree, st, 1, 0.0)
    summ = summarize([mk(True, "Agree", "Converged"), mk(False, "Disagree", "Converged"),
                      mk(None, "Unknown", "IterationLimit")])
    assert summ["oracle_colorable"] == {"Agree": 1, "Disagree": 0, "Unknown": 0}
    assert summ["oracle_not_colorable"]["Disagree"] == 1
    assert summ["oracle_unknown"]["Unknown"] == 1
    assert summ["solver_status"] == {"Converged": 2, "IterationLimit": 1, "NumericalFailure": 0}
    assert summ["disagreements"] == 1 and summ["rows"] == 3


# --------------------------------------------------------------------------
# identities
# --------------------------------------------------------------------------
def test_identities_small_run():
    rep = run_identities(50, 7)
    fam = rep["families"]
    assert fam["identity"]["max_residual"] <= 1e-9
    assert fam["dual"]["failures"] == 0 and fam["dual"]["min_eigenvalue"] >= -1e-9
    assert fam["kernel"]["max_residual"] <= 1e-12
    assert fam["cp_factor"]["max_residual"] <= 1e-12


def test_identities_empty_and_deterministic():
    assert run_identities(0, 3) == {"trials": 0, "seed": 3, "families": {}}
    assert run_identities(20, 11) == run_identities(20, 11)


def test_random_colored_graph_is_proper():
    rng = np.random.default_rng(0)
    for _ in range(50):
        g, c = random_colored_graph(rng)
        assert 1 <= g.n <= 8 and g.max_degree() <= 4
        assert c.is_proper(g)


# --------------------------------------------------------------------------
# dual feasibility
# --------------------------------------------------------------------------
@pytest.mark.parametrize("g", [complete(2), cycle(5), path(4)])
def test_run_dual_colourable(g):
    rep = run_dual(g)
    assert rep.point_verified
    assert rep.tau <= 1e-7
    assert rep.oracle_colorable and rep.coloring_checks_ok
    assert rep.coloring_tau <= 1e-9


def test_run_dual_k4_records_tau():
    rep = run_dual(complete(4))
    assert rep.oracle_colorable is False
    assert rep.coloring_checks_ok is None
    assert rep.point_verified
    assert math.isfinite(rep.tau)


def test_tau_invariant_under_relabelling():
    g = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)])
    h = g.relabel([4, 2, 0, 1, 3])
    a, b = run_dual(g), run_dual(h)
    assert abs(a.tau - b.tau) <= 1e-7


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------
ROW = SweepRow(3, 4, 6, 63, False, -99.99999999123456789, "NotThreeColorable", "Agree",
               "Converged", 12, 0.0123456789012345)


def test_report_json_single_row():
    data = json.loads(report_text([ROW], "json"))
    assert isinstance(data, list) and len(data) == 1
    assert list(data[0]) == list(SWEEP_FIELDS)
    assert data[0]["objective"] == -99.9999999912


def test_report_csv_empty_is_header_only():
    assert report_text([], "csv") == ",".join(SWEEP_FIELDS) + "\r\n"


def test_report_csv_quoting():
    row = dataclasses.replace(ROW, decision='odd,"value"')
    text = report_text([row], "csv")
    parsed = list(csv.reader(text.splitlines()))
    assert parsed[1][SWEEP_FIELDS.index("decision")] == 'odd,"value"'
    assert '"odd,""value"""' in text


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_report_round_trip(tmp_path, fmt):
    rows = [ROW, dataclasses.replace(ROW, graph_id=4, oracle_colorable=None, objective=0.0),
            dataclasses.replace(ROW, graph_id=5, objective=math.nan)]
    p = tmp_path / f"rows.{fmt}"
    report_write(rows, fmt, p)
    back = report_read(fmt, p)
    expect = [rounded(r) for r in rows]
    assert len(back) == 3
    for a, b in zip(back, expect):
        for f in SWEEP_FIELDS:
            x, y = getattr(a, f), getattr(b, f)
            assert x == y or (isinstance(x, float) and math.isnan(x) and math.isnan(y)), f


def test_report_write_error_names_path(tmp_path):
    target = tmp_path / "missing" / "rows.json"
    with pytest.raises(OSError, match="missing"):
        report_write([ROW], "json", target)


def test_report_unknown_format():
    with pytest.raises(ValueError):
        report_text([ROW], "xml")
