import csv
import io
import json

import pytest

from optagg import harness
from optagg.cli import main
from optagg.milp_model import build_model, format_solution
from optagg import exact_solver
from optagg.topology import load_topology
from optagg.traffic import load_demands, parse_demands


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO("\n".join(l for l in text.splitlines() if not l.startswith("#")))))


def test_solve_table1(capsys):
    code, out, _ = run(capsys, "solve", "--topology", "nsfnet", "--demands", "table1")
    assert code == 0
    by_demand = {r["demand"]: r for r in rows(out)}
    assert by_demand["11->1"]["agg_node"] == "11"
    assert by_demand["11->1"]["agg_links"] == "11-8-1"
    assert by_demand["14->1"]["with_demand"] == "11->1"
    assert by_demand["11->12"]["agg_node"] == "N/A"
    assert "# cost=12" in out


def test_bypass(capsys):
    code, out, _ = run(capsys, "bypass", "--topology", "nsfnet", "--demands", "table1")
    assert code == 0 and "# cost=13" in out
    assert {r["demand"]: r["route"] for r in rows(out)}["14->1"] == "14-7-3-1"


def test_compare_toy(capsys):
    code, out, _ = run(capsys, "compare", "--topology", "toy", "--demands", "toy")
    (row,) = rows(out)
    assert code == 0
    assert (row["bypass_cost"], row["agg_cost"], row["bypass_wl"], row["agg_wl"]) == ("6", "4", "2", "1")
    code, out, _ = run(capsys, "compare", "--topology", "toy", "--demands", "toy", "--format", "json")
    assert json.loads(out)["rows"][0]["agg_cost"] == 4


def test_gen_traffic(tmp_path, capsys):
    out = tmp_path / "d.txt"
    code, _, _ = run(capsys, "gen-traffic", "--topology", "nsfnet", "--dests", "4",
                     "--seed", "9", "--sample", "2", "--out", str(out))
    assert code == 0
    text = out.read_text()
    assert text.startswith("# two-to-many traffic: seed=9 sample=2")
    assert len(parse_demands(text)) == 8
    code, _, err = run(capsys, "gen-traffic", "--topology", "nsfnet", "--dests", "13")
    assert code == 1 and "exceed" in err


def test_export_and_import(tmp_path, capsys):
    lp = tmp_path / "m.lp"
    code, out, _ = run(capsys, "export-lp", "--topology", "nsfnet", "--demands", "table1", "--out", str(lp))
    assert code == 0 and lp.read_text().startswith("\\")
    mapping = tmp_path / "m.map.json"
    assert json.loads(mapping.read_text())["num_variables"] == 5216

    t, ds = load_topology("nsfnet"), load_demands("table1")
    m = build_model(t, ds)
    sol = tmp_path / "opt.sol"
    sol.write_text(format_solution(m, exact_solver.encode_plan(m, exact_solver.solve(t, ds))))
    code, out, _ = run(capsys, "import-sol", "--topology", "nsfnet", "--demands", "table1",
                       "--model-map", str(mapping), "--sol", str(sol))
    assert code == 0
    assert "# objective=12" in out and "verdict: feasible" in out
    assert {r["demand"]: r["agg_node"] for r in rows(out)}["14->1"] == "11"

    truncated = tmp_path / "cut.sol"
    truncated.write_text("\n".join(sol.read_text().splitlines()[:100]))
    code, _, err = run(capsys, "import-sol", "--topology", "nsfnet", "--demands", "table1",
                       "--model-map", str(mapping), "--sol", str(truncated))
    assert code != 0 and "missing" in err

    zeros = tmp_path / "zeros.sol"
    zeros.write_text("\n".join(f"{n} 0" for n in m.catalog.names))
    code, out, _ = run(capsys, "import-sol", "--topology", "nsfnet", "--demands", "table1",
                       "--model-map", str(mapping), "--sol", str(zeros))
    assert code == 3 and "infeasible" in out


def test_import_rejects_foreign_map(tmp_path, capsys):
    lp = tmp_path / "toy.lp"
    run(capsys, "export-lp", "--topology", "toy", "--demands", "toy", "--out", str(lp))
    code, _, err = run(capsys, "import-sol", "--topology", "nsfnet", "--demands", "table1",
                       "--model-map", str(tmp_path / "toy.map.json"), "--sol", str(lp))
    assert code == 1 and "does not match" in err


def test_file_errors(tmp_path, capsys):
    code, _, err = run(capsys, "solve", "--topology", str(tmp_path / "nope.topo"), "--demands", "table1")
    assert code == 1 and "nope.topo" in err
    bad = tmp_path / "bad.topo"
    bad.write_text("nodes 3\nlink 3 3\n")
    code, _, err = run(capsys, "solve", "--topology", str(bad), "--demands", "table1")
    assert code == 1 and "self-loop" in err
    code, _, err = run(capsys, "solve", "--topology", "toy", "--demands", "table1")
    assert code == 1 and "unknown node" in err


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["solve", "--topology", "nsfnet"])
    assert info.value.code == 2


def test_experiment_outputs(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, stdout, _ = run(capsys, "experiment", "--topology", "nsfnet", "--scenarios", "4,8",
                          "--samples", "3", "--seed", "5", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "scenario,sample,seed,bypass_cost,agg_cost,gain,bypass_wl,agg_wl,pairs,ms"
    assert len(lines) == 7
    assert (tmp_path / "r.summary.csv").exists()
    long = (tmp_path / "r.long.csv").read_text().splitlines()
    assert len(long) == 13
    assert "destinations=4" in stdout
    code, _, err = run(capsys, "experiment", "--topology", "nsfnet", "--scenarios", "13")
    assert code == 1 and "exceed" in err


def test_report_soundness(nsf):
    report = harness.run_experiment(nsf, (4, 12), 4, seed=3)
    for r in report.rows:
        assert r.agg_cost <= r.bypass_cost
        assert abs(r.gain - (r.bypass_cost - r.agg_cost) / r.bypass_cost) < 1e-9
    for row in harness.rows_from_csv(report.to_csv()):
        b, a, g = int(row["bypass_cost"]), int(row["agg_cost"]), float(row["gain"])
        assert abs(g - (b - a) / b) < 1e-9
    summary = report.summary()
    for s in summary:
        gains = [r.gain for r in report.rows if r.scenario == s["scenario"]]
        assert s["max_gain"] == max(gains) and s["min_gain"] == min(gains)
        assert s["mean_gain"] == sum(gains) / len(gains)


def test_timing_fills_ms(nsf):
    report = harness.run_experiment(nsf, (4,), 1, timing=True)
    assert report.rows[0].ms is not None
    assert harness.run_experiment(nsf, (4,), 1).rows[0].row()["ms"] == ""
