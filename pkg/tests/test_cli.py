import csv
import json
import math

import pytest
import yaml

from weaklab.cli import main
from weaklab.errors import ScenarioError
from weaklab.runner import CSV_COLUMNS, gallery_audit, run_scenario, write_report
from weaklab.scenario import load_scenario, parse_scenario

SQRT3 = math.sqrt(3)


def quantum_data(**over):
    data = {
        "engine": "quantum",
        "object": {"preset": "anomalous"},
        "pointers": [{"preset": "gaussian"}],
        "sweep": {"epsilons": [1e-3], "outcomes": [0]},
        "grid": {"n_points": 256},
    }
    data.update(over)
    return data


def classical_data(**over):
    data = {
        "engine": "classical",
        "object": {"preset": "correlated", "observable": "p"},
        "pointers": [{"preset": "gaussian"}],
        "sweep": {"epsilons": [0.01]},
        "ensemble": {"n_samples": 20000, "n_bins": 11, "q_range": 2.5},
        "seed": 7,
    }
    data.update(over)
    return data


def write_yaml(tmp_path, data, name="s.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


# --- validation -----------------------------------------------------------------

def test_unknown_key_rejected_with_path():
    data = quantum_data()
    data["sweep"]["epsilon"] = [1e-3]
    with pytest.raises(ScenarioError) as info:
        parse_scenario(data)
    assert any(path.startswith("sweep") for path, _ in info.value.errors)


def test_bad_value_has_field_path():
    data = quantum_data(grid={"n_points": 4})
    with pytest.raises(ScenarioError) as info:
        parse_scenario(data)
    assert ("grid.n_points" in [p for p, _ in info.value.errors])


@pytest.mark.parametrize("eps", [[-1e-3], [1e-3, 1e-4], [], [1e-3, 1e-3]])
def test_bad_epsilon_lists(eps):
    with pytest.raises(ScenarioError):
        parse_scenario(quantum_data(sweep={"epsilons": eps}))


def test_unknown_presets_rejected():
    with pytest.raises(ScenarioError, match="boosted"):
        parse_scenario(classical_data(pointers=[{"preset": "boosted"}]))
    with pytest.raises(ScenarioError, match="nope"):
        parse_scenario(quantum_data(object={"preset": "nope"}))


def test_duplicate_pointer_names_need_labels():
    ptrs = [{"preset": "gaussian"}, {"preset": "gaussian", "params": {"sigma": 2.0}}]
    with pytest.raises(ScenarioError):
        parse_scenario(quantum_data(pointers=ptrs))
    ptrs[1]["label"] = "wide"
    assert [p.name for p in parse_scenario(quantum_data(pointers=ptrs)).pointers] == ["gaussian", "wide"]


def test_inline_object_runs():
    data = quantum_data(object={
        "state": [[0.5, 0.5], [0.5, 0.5]],
        "observable": [[1, 0], [0, -1]],
        "postselection": [[0.5, SQRT3 / 2], [-SQRT3 / 2, 0.5]],
    })
    rec = run_scenario(parse_scenario(data))["records"][0]
    assert rec["cw_re"] == pytest.approx(-(2 + SQRT3), abs=1e-12)


def test_geometric_sweep_values():
    sc = parse_scenario(quantum_data(sweep={"geometric": {"start": 1e-4, "stop": 1e-2, "num": 5}}))
    assert sc.sweep.values() == pytest.approx([1e-4, 1e-3 / 10**0.5, 1e-3, 10**-2.5, 1e-2])


# --- running ----------------------------------------------------------------------

def test_zero_coupling_gives_zero_shift():
    rec = run_scenario(parse_scenario(quantum_data(sweep={"epsilons": [0.0], "outcomes": [0]})))["records"]
    assert rec[0]["measured_shift"] == 0.0
    assert rec[0]["predicted_shift"] == 0.0
    assert rec[0]["abs_err"] == 0.0


def test_csv_columns_and_json(tmp_path):
    report = run_scenario(parse_scenario(quantum_data()))
    csv_path, json_path = write_report(report, tmp_path, "r")
    with open(csv_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_COLUMNS
    assert len(rows) == 2
    doc = json.loads(json_path.read_text())
    assert doc["schema_version"] == "1.0"
    assert {"records", "fits", "timings", "scenario"} <= set(doc)
    assert "joint_error" in doc["records"][0]


def test_rerun_is_byte_identical(tmp_path):
    for data in (quantum_data(), classical_data()):
        sc = parse_scenario(data)
        a, _ = write_report(run_scenario(sc), tmp_path / "a", "r")
        b, _ = write_report(run_scenario(sc), tmp_path / "b", "r")
        assert a.read_bytes() == b.read_bytes()


def test_parallel_matches_serial(tmp_path):
    data = quantum_data(pointers=[{"preset": "gaussian"}, {"preset": "thermal"}],
                        sweep={"epsilons": [1e-3, 1e-2]})
    sc = parse_scenario(data)
    a, _ = write_report(run_scenario(sc, workers=1), tmp_path / "a", "r")
    b, _ = write_report(run_scenario(sc, workers=2), tmp_path / "b", "r")
    assert a.read_bytes() == b.read_bytes()


def test_anomalous_sweep_fits_and_pointer_independence():
    data = quantum_data(pointers=[{"preset": "gaussian"}, {"preset": "thermal"}],
                        sweep={"geometric": {"start": 1e-4, "stop": 1e-2, "num": 5}, "outcomes": [0]},
                        grid={"n_points": 1024})
    report = run_scenario(parse_scenario(data))
    cws = {r["cw_re"] for r in report["records"]}
    assert max(cws) - min(cws) < 1e-12
    joint = [f for f in report["fits"] if f["quantity"] == "joint_error"]
    assert len(joint) == 2
    for f in joint:
        assert abs(f["slope"] - 2) < 0.1
    assert all("zero_current=1" in r["flags"] for r in report["records"])


def test_classical_scenario_within_three_se():
    report = run_scenario(parse_scenario(classical_data(ensemble={"n_samples": 200000, "n_bins": 11,
                                                                     "q_range": 2.5})))
    recs = report["records"]
    ok = [abs(r["measured_shift"] - 0.01 * 0.8 * r["_bin_center"]) <= 3 * r["_measured_se"] for r in recs]
    assert sum(ok) >= 0.9 * len(ok)
    assert all(r["cw_im"] == 0.0 for r in recs)


# --- CLI verbs ----------------------------------------------------------------------

def test_cli_validate(tmp_path, capsys):
    assert main(["validate", str(write_yaml(tmp_path, quantum_data()))]) == 0
    bad = quantum_data(extra_key=1)
    assert main(["validate", str(write_yaml(tmp_path, bad, "bad.yaml"))]) == 1
    assert "extra_key" in capsys.readouterr().err


def test_cli_missing_file(tmp_path):
    assert main(["validate", str(tmp_path / "absent.yaml")]) == 1


def test_cli_run_writes_outputs(tmp_path):
    path = write_yaml(tmp_path, quantum_data())
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "report.csv").exists()
    assert (tmp_path / "out" / "report.json").exists()


def test_cli_run_current_carrying_pointer_exits_2(tmp_path):
    data = quantum_data(object={"preset": "imaginary"}, pointers=[{"preset": "boosted"}])
    path = write_yaml(tmp_path, data)
    assert main(["run", str(path), "--out", str(tmp_path)]) == 2


def test_cli_runtime_error_exits_3(tmp_path):
    # displacement eps * |c| beyond a quarter of the box
    data = quantum_data(sweep={"epsilons": [50.0]})
    assert main(["run", str(write_yaml(tmp_path, data)), "--out", str(tmp_path)]) == 3


def test_cli_seed_override(tmp_path):
    path = write_yaml(tmp_path, classical_data())
    assert main(["run", str(path), "--out", str(tmp_path / "a"), "--seed", "3"]) == 0
    doc = json.loads((tmp_path / "a" / "report.json").read_text())
    assert doc["scenario"]["seed"] == 3


def test_cli_audit_and_list(capsys):
    assert main(["audit-gallery", "--n-points", "512"]) == 0
    out = capsys.readouterr().out
    assert "boosted" in out and "INVALID" in out
    assert main(["list-presets"]) == 0
    assert "anomalous" in capsys.readouterr().out


def test_gallery_audit_verdicts():
    rows = {(r["engine"], r["pointer"]): r for r in gallery_audit(n_points=512)}
    assert all(r["ok"] for r in rows.values())
    assert not rows["quantum", "boosted"]["zero_current"]
    assert rows["quantum", "thermal"]["zero_current"]


def test_shipped_scenarios_validate():
    from pathlib import Path

    for path in sorted((Path(__file__).parents[1] / "scenarios").glob("*.yaml")):
        load_scenario(path)
