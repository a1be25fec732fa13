import json
import math
import subprocess
import sys

import pytest

from qphase.cli import ScenarioError, load_scenario, main


def write(tmp_path, data, name="sc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2))
    return path


def summary(out):
    return json.loads((out / "summary.json").read_text())


def values(summ, task):
    return next(t for t in summ["tasks"] if t["task"] == task)["values"]


def test_coherent_scenario(tmp_path):
    out = tmp_path / "out"
    sc = write(tmp_path, {
        "state": {"kind": "coherent3d"},
        "output_dir": str(out),
        "analysis": [
            {"task": "qpot", "write_fields": False, "checks": [{"value": "max_interior_error_vs_closed_form", "op": "<", "limit": 1e-6}]},
            {"task": "capacity"},
            {"task": "blob-check"},
            {"task": "rs-check"},
        ],
    })
    assert main(["run", str(sc)]) == 0
    s = summary(out)
    assert s["summary_version"] == 1 and s["passed"]
    assert values(s, "qpot")["Q_at_origin_gridpoint"] == pytest.approx(1.5, abs=1e-8)
    cap = values(s, "capacity")
    assert cap["capacity"] == pytest.approx(3 * math.pi) and cap["capacity_in_h"] == pytest.approx(1.5)
    assert values(s, "blob-check")["ratio"] == pytest.approx(3.0)
    assert values(s, "rs-check")["margin"] == pytest.approx(0.0, abs=1e-10)
    assert (out / "capacity.json").exists() and (out / "covariance.json").exists()


def test_well_scenario_nodes_and_dynamics(tmp_path):
    out = tmp_path / "out"
    sc = write(tmp_path, {
        "state": {"kind": "well1d", "n": 2},
        "output_dir": str(out),
        "analysis": [
            {"task": "nodes"},
            {"task": "energy", "checks": [{"value": "max_interior_total_minus_E", "op": "<", "limit": 1e-6}]},
            {"task": "evolve", "dt": 1e-4, "n_steps": 100, "record_every": 10},
            {"task": "residuals"},
            {"task": "trajectories", "n_seeds": 5},
        ],
    })
    assert main(["run", str(sc)]) == 0
    s = summary(out)
    assert values(s, "nodes")["node_positions_in_L"] == [pytest.approx(0.5, abs=1e-6)]
    assert values(s, "trajectories")["status_counts"]["ok"] == 5
    header = (out / "trajectories.csv").read_text().splitlines()[0]
    assert header == "seed_id,t,x"
    assert (out / "timeseries" / "manifest.json").exists()


def test_empty_analysis_passes(tmp_path):
    out = tmp_path / "out"
    sc = write(tmp_path, {"state": {"kind": "oscillator1d"}, "output_dir": str(out), "analysis": []})
    assert main(["run", str(sc)]) == 0
    assert summary(out)["tasks"] == []


def test_schema_error_reports_line(tmp_path, capsys):
    text = '{\n  "state": {"kind": "coherent3d"},\n  "analysis": [\n    {"task": "qpot"},\n    {"task": "bogus"}\n  ]\n}\n'
    path = tmp_path / "bad.json"
    path.write_text(text)
    with pytest.raises(ScenarioError, match=r"bad.json:5: analysis/1/task"):
        load_scenario(path)
    assert main(["run", str(path)]) == 2
    assert ":5:" in capsys.readouterr().err


def test_invalid_json_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "state": {"kind": "coherent3d"},,\n}')
    with pytest.raises(ScenarioError, match=r"broken.json:2:\d+: invalid JSON"):
        load_scenario(path)


def test_unknown_check_value_is_usage_error(tmp_path):
    sc = write(tmp_path, {
        "state": {"kind": "oscillator1d"},
        "output_dir": str(tmp_path / "o"),
        "analysis": [{"task": "qpot", "write_fields": False, "checks": [{"value": "nonexistent", "op": "<", "limit": 1}]}],
    })
    assert main(["run", str(sc)]) == 2


def test_failed_check_and_failed_task_exit_1(tmp_path):
    out = tmp_path / "o"
    sc = write(tmp_path, {
        "state": {"kind": "oscillator1d"},
        "output_dir": str(out),
        "analysis": [{"task": "qpot", "write_fields": False, "checks": [{"value": "Q_at_origin_gridpoint", "op": ">", "limit": 1.0}]}],
    })
    assert main(["run", str(sc)]) == 1
    sc2 = write(tmp_path, {"state": {"kind": "gaussian_packet"}, "output_dir": str(out), "analysis": [{"task": "capacity"}]}, "b.json")
    assert main(["run", str(sc2)]) == 1
    task = summary(out)["tasks"][0]
    assert not task["passed"] and "NoClosedFormError" in task["error"]


def test_residuals_without_evolve_fails(tmp_path):
    out = tmp_path / "o"
    sc = write(tmp_path, {"state": {"kind": "oscillator1d"}, "output_dir": str(out), "analysis": [{"task": "residuals"}]})
    assert main(["run", str(sc)]) == 1


def test_overrides_are_applied_and_logged(tmp_path, caplog):
    out = tmp_path / "o"
    sc = write(tmp_path, {"state": {"kind": "oscillator1d"}, "output_dir": str(tmp_path / "ignored"), "analysis": [
        {"task": "qpot", "write_fields": False}, {"task": "capacity"}]})
    code = main(["run", str(sc), "--omega", "2", "--hbar", "0.5", "--grid-override", "128:-6:6", "--out", str(out)])
    assert code == 0
    s = summary(out)
    assert s["grid"]["n_points"] == [128]
    # ground state of omega=2, hbar=0.5: Q(0) = hbar omega / 2
    assert values(s, "qpot")["Q_at_origin_gridpoint"] == pytest.approx(0.5, abs=1e-8)
    assert values(s, "capacity")["capacity_in_h_half"] == pytest.approx(1.0)
    assert any("override" in r.message for r in caplog.records)


def test_setup_failure_exits_2(tmp_path):
    sc = write(tmp_path, {"state": {"kind": "gaussian_packet", "sigma": 1.0}, "grid": {"n_points": 32, "lower": -2, "upper": 2},
                          "output_dir": str(tmp_path / "o"), "analysis": []})
    assert main(["run", str(sc)]) == 2


def test_fields_are_byte_identical_across_runs(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        sc = write(tmp_path, {"state": {"kind": "oscillator1d", "n": 1}, "seed": 3, "output_dir": str(out), "analysis": [
            {"task": "decompose"}, {"task": "evolve", "dt": 1e-3, "n_steps": 20, "record_every": 5},
            {"task": "trajectories", "n_seeds": 10}]}, f"s{k}.json")
        assert main(["run", str(sc)]) == 0
        outs.append(out)
    for name in ("amplitude.csv", "phase.csv", "trajectories.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_verify_symplectic_suite(tmp_path, capsys):
    path = tmp_path / "v.json"
    assert main(["verify", "symplectic", "--json", str(path)]) == 0
    captured = capsys.readouterr()
    verdict = json.loads(captured.out)
    assert verdict["passed"] and [c["id"] for c in verdict["criteria"]] == [4, 5, 11]
    assert captured.err.count("PASS") >= 3
    assert json.loads(path.read_text()) == verdict


def test_unknown_suite_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "everything"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "o"
    sc = write(tmp_path, {"state": {"kind": "well1d", "n": 3}, "output_dir": str(out), "analysis": [{"task": "nodes"}]})
    proc = subprocess.run([sys.executable, "-m", "qphase", "run", str(sc)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["passed"]
    assert len(values(summary(out), "nodes")["node_positions"]) == 2
