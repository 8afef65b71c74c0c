import csv
import json
import shutil
import subprocess

import pytest

from gapcross.cli import main


@pytest.fixture
def step_file(tmp_path):
    p = tmp_path / "step.toml"
    p.write_text('kind = "step"\nlevels = [[0, 0.5, 40.0], [0.5, 1, 0.0]]\n')
    return p


def _run(tmp_path, *argv):
    out = tmp_path / "out"
    return main(["--out", str(out), "--jobs", "1", *argv]), out


def test_bands_from_file(tmp_path, step_file):
    code, out = _run(tmp_path, "bands", "--potential", str(step_file), "--emax", "60")
    assert code == 0
    rows = list(csv.DictReader(open(out / "bands.csv")))
    assert any(r["kind"] == "gap" and r["open"] == "True" for r in rows)
    m = json.loads((out / "bands.manifest.json").read_text())
    assert set(m["outputs"]) == {"bands.csv"}


def test_missing_potential_exit_2(tmp_path, capsys):
    code, _ = _run(tmp_path, "bands", "--potential", str(tmp_path / "absent.toml"))
    assert code == 2
    assert "absent.toml" in capsys.readouterr().err


def test_wrong_dimension_exit_2(tmp_path, step_file):
    code, _ = _run(tmp_path, "strip", "--potential", str(step_file))
    assert code == 2


def test_bad_grid_exit_2(tmp_path):
    code, _ = _run(tmp_path, "crossings", "--h", "0.003")
    assert code == 2


def test_crossings_gap_one(tmp_path):
    code, out = _run(tmp_path, "crossings", "--gap", "1", "--n", "2", "--h", "0.002", "--t-steps", "20")
    assert code == 0
    d = json.loads((out / "crossings.json").read_text())
    assert d["N_k"] == 1 and all(c["ok"] for c in d["band_checks"])


def test_replay_identical(tmp_path, capsys):
    code, out = _run(tmp_path, "rotate", "orbit", "--tan", "3/4", "--t", "0", "--M", "2000")
    assert code == 0
    assert main(["replay", str(out / "rotate.manifest.json")]) == 0
    assert "replay identical" in capsys.readouterr().out


def test_replay_detects_tampering(tmp_path):
    code, out = _run(tmp_path, "rotate", "orbit", "--tan", "3/4", "--t", "0", "--M", "2000")
    (out / "orbit.json").write_text("{}\n")
    m = out / "rotate.manifest.json"
    d = json.loads(m.read_text())
    d["outputs"]["orbit.json"] = "0" * 64
    m.write_text(json.dumps(d))
    assert main(["replay", str(m)]) == 3


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("GAPCROSS_SEED", "17")
    code, out = _run(tmp_path, "rotate", "align", "--tan", "3/4", "--eps", "0.01")
    assert code == 0
    assert json.loads((out / "rotate.manifest.json").read_text())["seed"] == 17
    monkeypatch.setenv("GAPCROSS_SEED", "x")
    assert _run(tmp_path, "rotate", "align", "--tan", "3/4")[0] == 2


def test_rotate_align_witness(tmp_path):
    code, out = _run(tmp_path, "rotate", "align", "--tan", "3/4", "--t", "0", "--eps", "0.01")
    d = json.loads((out / "alignment.json").read_text())
    assert code == 0 and (d["k"], d["eta"]) == (4, 5)


def test_rotate_needs_an_angle(tmp_path):
    assert _run(tmp_path, "rotate", "align")[0] == 2
    assert _run(tmp_path, "rotate", "align", "--tan", "x/y")[0] == 2


def test_muffin_discs(tmp_path):
    code, out = _run(tmp_path, "muffin", "discs", "--r", "0.4", "--k", "3", "--ladder", "0.04", "0.02")
    rows = list(csv.DictReader(open(out / "discs.csv")))
    assert code == 0 and len(rows) == 3


def test_verify_single_criterion(tmp_path):
    code, out = _run(tmp_path, "verify", "--only", "13")
    d = json.loads((out / "acceptance.json").read_text())
    assert code == 0 and d["passed"]


@pytest.mark.skipif(shutil.which("gapcross") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["gapcross", "--out", str(tmp_path), "rotate", "align", "--tan", "3/4"],
                       capture_output=True, text=True, timeout=120)
    assert r.returncode == 0 and "alignment.json" in r.stdout
