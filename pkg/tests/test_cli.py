import json
import subprocess
import sys

import pytest

from colorsdp.cli import main
from colorsdp.graph import complete, cycle, parse_dimacs, path


@pytest.fixture
def col(tmp_path):
    def write(g, name="g.col"):
        p = tmp_path / name
        p.write_text(g.to_dimacs())
        return str(p)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_decide_text(capsys, col):
    code, out, _ = run(capsys, "decide", col(complete(2)))
    assert code == 0
    assert "ThreeColorable" in out and "Agree" in out


def test_decide_json_k4(capsys, col):
    code, out, _ = run(capsys, "decide", col(complete(4)), "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["oracle"] == {"colorable": False, "count": 0}
    assert data["status"] == "Converged"
    assert data["decision"] in ("NotThreeColorable", "Inconclusive", "ThreeColorable")


def test_global_flags_before_subcommand(capsys, col):
    code, out, _ = run(capsys, "--format", "json", "--bound", "-10", "decide", col(complete(4)))
    data = json.loads(out)
    assert code == 0
    assert data["objective"] >= -10 - 1e-6


def test_solver_failure_exit_code(capsys, col):
    code, _, _ = run(capsys, "decide", col(cycle(5)), "--tol-gap", "1e-30")
    assert code == 3


def test_bad_input_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.col"
    p.write_text("p edge 2 1\ne 1 3\n")
    code, _, err = run(capsys, "decide", str(p))
    assert code == 2 and "line 2" in err
    code, _, err = run(capsys, "oracle", str(tmp_path / "nope.col"))
    assert code == 2 and "nope.col" in err


def test_oracle(capsys, col):
    code, out, _ = run(capsys, "oracle", col(cycle(5)), "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["count"] == 30 and len(data["witness"]) == 5


def test_sweep_csv_to_file(capsys, tmp_path):
    out_path = tmp_path / "rows.csv"
    code, _, err = run(capsys, "sweep", "--n-max", "3", "--format", "csv", "--out", str(out_path))
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert len(lines) == 6 and lines[0].startswith("graph_id,n,m")
    assert json.loads(err)["rows"] == 5


def test_sweep_json_stdout(capsys):
    code, out, _ = run(capsys, "sweep", "--n-max", "2")
    assert code == 0 and len(json.loads(out)) == 1


def test_sweep_unwritable_out(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--n-max", "2", "--out", str(tmp_path / "x" / "y.json"))
    assert code == 2 and "y.json" in err


def test_identities(capsys):
    code, out, _ = run(capsys, "identities", "--trials", "5", "--seed", "2", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["trials"] == 5 and set(data["families"]) == {
        "identity", "dual", "kernel", "cp_factor"}


def test_dual(capsys, col):
    code, out, _ = run(capsys, "dual", col(path(3)), "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["tau"] <= 1e-7 and data["coloring_checks_ok"] is True


def test_cones_probe(capsys):
    code, out, _ = run(capsys, "cones", "probe-thm32", "--graph", "k4", "--t", "0.8333333333333334",
                       "--a", "6", "--b", "-1", "--max-depth", "1", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["predicted"] == pytest.approx(-6.0)
    assert data["verdict"]["kind"] in ("Copositive", "NotCopositive", "Unknown")


def test_cones_probe_rejects_c5(capsys):
    code, _, err = run(capsys, "cones", "probe-thm32", "--graph", "c5")
    assert code == 2 and "D-graph" in err


def test_gen(capsys, tmp_path):
    code, out, _ = run(capsys, "gen", "--kind", "cycle", "--k", "5")
    assert code == 0 and parse_dimacs(out) == cycle(5)
    p = tmp_path / "r.col"
    code, _, _ = run(capsys, "gen", "--kind", "random", "--n", "9", "--p", "0.4", "--seed", "3",
                     "--out", str(p))
    assert code == 0 and parse_dimacs(p.read_text()).n == 9
    code, _, err = run(capsys, "gen", "--kind", "complete", "--k", "6")
    assert code == 2 and "degree" in err
    code, _, err = run(capsys, "gen", "--kind", "path")
    assert code == 2 and "--k" in err


def test_usage_error_is_argparse_exit():
    with pytest.raises(SystemExit) as exc:
        main(["sweep"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    p = tmp_path / "k3.col"
    p.write_text(complete(3).to_dimacs())
    res = subprocess.run([sys.executable, "-m", "colorsdp", "oracle", str(p)],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and "count      6" in res.stdout
