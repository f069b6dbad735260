import csv
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from fracorder import __version__
from fracorder.cli import main
from fracorder.config import ConfigError, config_from_dict, load_config
from fracorder.objective import PenaltyKind
from fracorder.runner import COST_COLUMNS, TRACE_COLUMNS, emit, run


def write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


PRESET = {"y0": {"preset": "example1", "epsilon": 0.5, "j0": 2}}
MODES = {
    "name": "modes",
    "basis": {"kind": "dirichlet", "domain_length": 2.0, "J_max": 4},
    "T": 0.5,
    "y0": {"1": 1.0, "3": -0.25},
    "f": {"kind": "sampled", "times": [0.0, 0.25, 0.5], "values": {"2": [0.0, 1.0, 0.0]}},
    "yQ": {"kind": "constant", "coeffs": {"1": 0.5}},
    "penalty": {"kind": "reciprocal", "L": 3.0},
    "optimizer": {"grid_points": 32},
    "snapshots": [{"s": 1.0, "t": 0.5}],
    "snapshot_points": 9,
}


def test_minimal_preset_defaults(tmp_path):
    cfg = load_config(write(tmp_path, PRESET))
    assert cfg.basis.kind == "neumann"
    assert cfg.basis.J_max == 10
    assert cfg.basis.domain_length == math.pi
    assert cfg.penalty.kind is PenaltyKind.EXP_OVER_S
    assert cfg.T == 1.0


def test_preset_expands_to_exact_fields():
    sc, _ = config_from_dict(PRESET).build()
    y0 = np.zeros(10)
    y0[0], y0[2] = math.sqrt(math.pi), 0.5
    np.testing.assert_array_equal(sc.state.y0, y0)
    target = np.zeros(10)
    target[0] = math.sqrt(math.pi)
    np.testing.assert_array_equal(sc.target.coeffs, target)

    sc, _ = config_from_dict({"y0": {"preset": "example2", "epsilon": 0.1, "j0": 5}}).build()
    assert np.flatnonzero(sc.state.y0).tolist() == [4]
    np.testing.assert_array_equal(sc.state.y0, sc.target.coeffs)


def test_reciprocal_penalty_parsed():
    cfg = config_from_dict({**PRESET, "penalty": {"kind": "reciprocal", "L": 1.0}})
    assert cfg.penalty.kind is PenaltyKind.RECIPROCAL and cfg.penalty.L == 1.0


@pytest.mark.parametrize("patch, field", [
    ({"y0": {"10": 1.0}, "basis": {"kind": "neumann", "J_max": 10}}, "y0"),
    ({"y0": {"5": 1.0}, "basis": {"kind": "dirichlet", "J_max": 4}}, "y0"),
    ({**PRESET, "penalty": {"kind": "recip", "L": 1.0}}, "penalty.kind"),
    ({**PRESET, "penalty": {"kind": "reciprocal"}}, "penalty"),
    ({**PRESET, "T": -1}, "T"),
    ({**PRESET, "tee": 1}, "config"),
    ({**PRESET, "basis": {"kind": "dirichlet", "J_max": 10}}, "basis.kind"),
    ({**PRESET, "yQ": {"kind": "zero"}}, "yQ"),
    ({**PRESET, "optimizer": {"grid": 10}}, "optimizer"),
    ({**PRESET, "optimizer": {"grid_points": 4}}, "optimizer"),
    ({**PRESET, "outputs": ["plots"]}, "outputs"),
    ({**PRESET, "snapshots": [{"s": 1.0, "t": 2.0}]}, "snapshots[0].t"),
    ({**PRESET, "y0": {"preset": "example3", "epsilon": 0.1, "j0": 1}}, "y0.preset"),
    ({**MODES, "f": {"kind": "sampled", "times": [0.0, 0.25], "values": {}}}, "f.times"),
    ({**MODES, "yQ": {"kind": "constant", "coeffs": {"x": 1}}}, "yQ.coeffs"),
    ({**MODES, "basis": {"kind": "explicit", "eigenvalues": [1.0, 2.0, 3.0, 4.0]}}, "snapshots"),
])
def test_validation_names_field(patch, field):
    with pytest.raises(ConfigError) as err:
        config_from_dict(patch)
    assert str(err.value).startswith(field)


def test_parse_error_has_line_and_column(tmp_path):
    path = write(tmp_path, '{\n  "y0": {"1": 1,}\n}')
    with pytest.raises(ConfigError, match=r"cfg\.json:2:\d+:"):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="nope.json"):
        load_config(str(tmp_path / "nope.json"))


@pytest.mark.parametrize("obj", [PRESET, MODES])
def test_round_trip(obj):
    cfg = config_from_dict(obj)
    again = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_overrides():
    cfg = config_from_dict(PRESET).with_overrides(grid_points=20, J_max=4)
    assert cfg.optimizer.grid_points == 20 and cfg.basis.J_max == 4
    with pytest.raises(ConfigError):
        config_from_dict(PRESET).with_overrides(J_max=2)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_and_emit(tmp_path):
    arts = run(config_from_dict({**PRESET, "snapshots": [{"s": 1.0, "t": 0.25}],
                                 "snapshot_points": 17}))
    assert arts.exit_code == 0
    assert arts.report.s_star > 1.0
    out = tmp_path / "out"
    emit(arts, str(out))
    rows = read_csv(out / "cost_curve.csv")
    assert tuple(rows[0]) == COST_COLUMNS
    assert len(rows) - 1 > 64
    assert all(len(r) == 6 for r in rows)
    s = [float(r[0]) for r in rows[1:]]
    assert s == sorted(s) and arts.report.s_star in s
    assert all(math.isfinite(float(v)) for r in rows[1:] for v in r)
    trace = read_csv(out / "trace.csv")
    assert tuple(trace[0]) == TRACE_COLUMNS
    snap = read_csv(out / "snapshots" / "snapshot_000.csv")
    assert snap[0] == ["s", "t", "x", "y"] and len(snap) == 18
    summary = json.loads((out / "summary.json").read_text())
    assert summary["version"] == __version__
    assert summary["truncation"]["J_max"] == 10
    assert config_from_dict(summary["config"]) == arts.config


def test_snapshot_values_match_state(tmp_path):
    cfg = config_from_dict(MODES)
    arts = run(cfg)
    sc, _ = cfg.build()
    x = np.linspace(0, 2.0, 9)
    y = sc.state.trajectories(1.0, [0.5])[0][:, 0] @ sc.state.basis.evaluate(x)
    got = np.array([row[3] for row in arts.snapshots[0]])
    np.testing.assert_allclose(got, y, rtol=1e-14, atol=1e-15)


def test_no_snapshot_dir_when_none_requested(tmp_path):
    arts = run(config_from_dict(PRESET))
    emit(arts, str(tmp_path))
    assert not (tmp_path / "snapshots").exists()
    assert sorted(os.listdir(tmp_path)) == ["cost_curve.csv", "summary.json", "trace.csv"]


def test_formats_and_outputs_filter(tmp_path):
    arts = run(config_from_dict({**PRESET, "outputs": ["summary", "trace"]}))
    emit(arts, str(tmp_path), formats=("json",))
    assert os.listdir(tmp_path) == ["summary.json"]
    with pytest.raises(ValueError):
        emit(arts, str(tmp_path), formats=("xml",))


def test_emit_reports_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    arts = run(config_from_dict(PRESET))
    with pytest.raises(OSError, match="file"):
        emit(arts, str(blocker / "sub"))


@pytest.mark.parametrize("preset, eps, j0, check", [
    ("example1", 0.0, 2, lambda s: abs(s - 1) <= 1e-8),
    ("example1", 0.5, 2, lambda s: s > 1),
    ("example2", 0.5, 2, lambda s: s < 1),
    ("example2", 0.5, 1, lambda s: abs(s - 1) <= 1e-8),
])
def test_cli_run_examples(tmp_path, capsys, preset, eps, j0, check):
    path = write(tmp_path, {"y0": {"preset": preset, "epsilon": eps, "j0": j0}})
    out = tmp_path / "out"
    assert main(["run", "--config", path, "--out", str(out)]) == 0
    s_star = json.loads((out / "summary.json").read_text())["report"]["s_star"]
    assert check(s_star)


def test_cli_batch_threads(tmp_path, monkeypatch):
    a = write(tmp_path, {**PRESET, "name": "a"}, "a.json")
    b = write(tmp_path, {"name": "b", "y0": {"preset": "example2", "epsilon": 0.1, "j0": 5}},
              "b.json")
    monkeypatch.setenv("FRACORDER_THREADS", "2")
    out = tmp_path / "batch"
    assert main(["run", "--config", a, "--config", b, "--out", str(out), "--grid", "32"]) == 0
    assert sorted(os.listdir(out)) == ["a", "b"]
    summary = json.loads((out / "b" / "summary.json").read_text())
    assert summary["config"]["optimizer"]["grid_points"] == 32


def test_cli_bad_thread_cap(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("FRACORDER_THREADS", "lots")
    path = write(tmp_path, PRESET)
    assert main(["run", "--config", path, "--out", str(tmp_path / "o")]) == 1
    assert "FRACORDER_THREADS" in capsys.readouterr().err


def test_cli_config_error(tmp_path, capsys):
    path = write(tmp_path, {**PRESET, "T": "one"})
    assert main(["run", "--config", path, "--out", str(tmp_path / "o")]) == 1
    assert "T: expected a number" in capsys.readouterr().err


def test_cli_scan(tmp_path, capsys):
    path = write(tmp_path, PRESET)
    assert main(["scan", "--config", path, "--s-min", "0.5", "--s-max", "2",
                 "--points", "5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == ",".join(COST_COLUMNS) and len(lines) == 6
    assert main(["scan", "--config", path, "--s-min", "0.5", "--s-max", "2",
                 "--points", "5", "--out", str(tmp_path / "scan")]) == 0
    assert len(read_csv(tmp_path / "scan" / "cost_curve.csv")) == 6
    assert main(["scan", "--config", path, "--s-min", "2", "--s-max", "1",
                 "--points", "5"]) == 1


def test_cli_verify_subset(capsys):
    assert main(["verify", "--only", "1", "--only", "6"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 2 and "2/2 criteria passed" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fracorder", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "verify" in proc.stdout
