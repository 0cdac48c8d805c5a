import json
from pathlib import Path

import numpy as np
import pytest

from emlaopt.cli import main
from emlaopt.configio import ConfigError, build_actuator, build_gains, load_json


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=1))
    return str(path)


MAP_CFG = {"actuator": {"preset": "lift_6kw"},
           "grid": {"preset": "default", "n_force": 10, "n_velocity": 10}}
TRAJ_CFG = {"manipulator": {"preset": "default"},
            "problem": {"preset": "benchmark", "n_partitions": 16, "n_ctrl": 8},
            "weights": [0.5, 0.5]}


def run(args):
    return main(args)


def test_map_artifacts_and_determinism(tmp_path):
    cfg = write(tmp_path, "map.json", MAP_CFG)
    assert run(["map", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert run(["map", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    for name in ("efficiency_map.csv", "efficiency_map.json", "manifest.json"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, name
    header = (tmp_path / "a" / "efficiency_map.csv").read_text().splitlines()[0]
    assert header == "f_x,v_x,eta,p_cu,p_co,p_sw,p_d,p_mech,p_sc,feasible"


def test_map_parallel_jobs_identical(tmp_path):
    cfg = write(tmp_path, "map.json", MAP_CFG)
    run(["map", "--config", cfg, "--out", str(tmp_path / "j1"), "--jobs", "1"])
    run(["map", "--config", cfg, "--out", str(tmp_path / "j4"), "--jobs", "4"])
    assert (tmp_path / "j1" / "efficiency_map.csv").read_bytes() == \
        (tmp_path / "j4" / "efficiency_map.csv").read_bytes()


def test_trajopt_artifacts(tmp_path):
    cfg = write(tmp_path, "traj.json", TRAJ_CFG)
    assert run(["trajopt", "--config", cfg, "--out", str(tmp_path / "t")]) == 0
    csv_lines = (tmp_path / "t" / "trajectory.csv").read_text().splitlines()
    assert csv_lines[0] == "t,q1,q2,q3,dq1,dq2,dq3,vx1,vx2,vx3,fx1,fx2,fx3,p1,p2,p3"
    assert len(csv_lines) == 1 + 17
    doc = json.loads((tmp_path / "t" / "trajectory.json").read_text())
    assert doc["converged"]
    for row in csv_lines[1:]:
        for token in row.split(","):
            assert np.isfinite(float(token))


def test_trajopt_determinism(tmp_path):
    cfg = write(tmp_path, "traj.json", TRAJ_CFG)
    run(["trajopt", "--config", cfg, "--out", str(tmp_path / "r1")])
    run(["trajopt", "--config", cfg, "--out", str(tmp_path / "r2")])
    assert (tmp_path / "r1" / "trajectory.csv").read_bytes() == \
        (tmp_path / "r2" / "trajectory.csv").read_bytes()


@pytest.fixture(scope="module")
def bilevel_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("bilevel")
    cfg = write(tmp, "bl.json", {
        "manipulator": {"preset": "default"},
        "problem": {"preset": "benchmark", "n_partitions": 16, "n_ctrl": 8},
        "actuators": {"preset": "default"},
        "outer": {"method": "grid", "grid_points": 2},
        "maps": {"n_force": 15, "n_velocity": 15},
    })
    out = tmp / "out"
    assert run(["bilevel", "--config", cfg, "--out", str(out)]) == 0
    return tmp, cfg, out


def test_bilevel_artifacts(bilevel_dir):
    _, _, out = bilevel_dir
    doc = json.loads((out / "bilevel.json").read_text())
    assert len(doc["trace"]) == 4
    trace_lines = (out / "trace.csv").read_text().splitlines()
    assert trace_lines[0] == "w1,w2,F,inner_converged"
    assert len(trace_lines) == 5


def test_bilevel_jobs_identical(bilevel_dir):
    tmp, cfg, out = bilevel_dir
    out2 = tmp / "out_j2"
    assert run(["bilevel", "--config", cfg, "--out", str(out2), "--jobs", "2"]) == 0
    for name in ("bilevel.json", "trajectory.csv", "trace.csv"):
        assert (out / name).read_bytes() == (out2 / name).read_bytes(), name


def test_track_pipeline_roundtrip(bilevel_dir, tmp_path):
    _, _, out = bilevel_dir
    cfg = write(tmp_path, "track.json", {
        "trajectory": str(out / "bilevel.json"),
        "actuators": {"preset": "default"},
        "gains": {"preset": "published"},
        "disturbance": {"preset": "none"},
        "dt": 0.01,
    })
    trk = tmp_path / "trk"
    assert run(["track", "--config", cfg, "--out", str(trk)]) == 0
    # reference columns at the collocation instants carry the trajectory
    # samples verbatim
    import csv as _csv

    traj_rows = list(_csv.DictReader((out / "trajectory.csv").open()))
    track_rows = list(_csv.DictReader((trk / "tracking.csv").open()))
    by_time = {row["t"]: row for row in track_rows}
    matched = 0
    for row in traj_rows:
        if row["t"] in by_time:
            got = by_time[row["t"]]
            for j in (1, 2, 3):
                assert got[f"vx_ref{j}"] == row[f"dq{j}"]
                assert got[f"fx_ref{j}"] == row[f"fx{j}"]
            matched += 1
    assert matched == len(traj_rows)


def test_report_from_bilevel(bilevel_dir, tmp_path):
    _, _, out = bilevel_dir
    cfg = write(tmp_path, "report.json", {"artifacts": str(out)})
    rep = tmp_path / "rep"
    assert run(["report", "--config", cfg, "--out", str(rep)]) == 0
    doc = json.loads((rep / "report.json").read_text())
    assert "efficiency" in doc and "criteria" in doc
    assert abs(doc["cost_recomputed"] - doc["criteria"]["cost"]) <= 1e-10


def test_report_missing_artifacts(tmp_path):
    cfg = write(tmp_path, "report.json", {"artifacts": str(tmp_path / "nowhere")})
    assert run(["report", "--config", cfg, "--out", str(tmp_path / "rep")]) == 2


def test_report_rejects_empty_trajectory(tmp_path):
    empty = {"degree": 5, "control_points": [], "t_final": 1.0, "times": [],
             "q": [], "qd": [], "qdd": [], "v_x": [], "f_x": [], "power": [],
             "psi": [0, 0], "psi_raw": {}, "weights": [0.5, 0.5], "cost": 0.0,
             "constraint_violation": 0.0, "converged": True, "outer_iterations": 0}
    art = tmp_path / "art"
    art.mkdir()
    (art / "trajectory.json").write_text(json.dumps(empty))
    cfg = write(tmp_path, "report.json", {"artifacts": str(art)})
    assert run(["report", "--config", cfg, "--out", str(tmp_path / "rep")]) == 2


def test_bad_json_reports_line(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "actuator": {,}\n}')
    with pytest.raises(ConfigError, match="line 2"):
        load_json(bad)


def test_unknown_preset_reports_path():
    with pytest.raises(ConfigError, match="actuator.preset"):
        build_actuator({"preset": "mystery_motor"})


def test_missing_field_reports_path():
    with pytest.raises(ConfigError, match="gains"):
        build_gains({"delta": [1, 1, 1, 1]}, 3)


def test_invalid_config_exit_code(tmp_path):
    cfg = write(tmp_path, "map.json", {"actuator": {"preset": "nope"}})
    assert run(["map", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert not (tmp_path / "x" / "manifest.json").exists()
