import csv
import json
import subprocess
import sys

import pytest

from anchorplay.cli import _seed_list, main


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text("duration: 12\nseed: 4\n")
    return path


def test_run_writes_three_files(config, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["events.jsonl", "manifest.json", "metrics.json"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["resolved_config"]["seed"] == 4 and manifest["seeds"] == [4]
    assert main(["trace-check", str(out / "events.jsonl")]) == 0


def test_set_baseline_mode(config, tmp_path):
    out = tmp_path / "b"
    assert main(["run", "--config", str(config), "--out", str(out), "--set", "mode=BaselineAlwaysOn"]) == 0
    assert json.loads((out / "metrics.json").read_text())["camera_duty_cycle"] == 1.0


def test_dotted_override(config, tmp_path):
    out = tmp_path / "d"
    assert main(["run", "--config", str(config), "--out", str(out), "--set", "gating.dwell_threshold=1.5"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["resolved_config"]["gating"]["dwell_threshold"] == 1.5


def test_manifest_rerun_is_byte_identical(config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(config), "--out", str(a), "--seed", "9"]) == 0
    assert main(["run", "--config", str(a / "manifest.json"), "--out", str(b)]) == 0
    assert (a / "events.jsonl").read_bytes() == (b / "events.jsonl").read_bytes()
    assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()


def test_too_many_agents(config, tmp_path, capsys):
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "x"), "--set", "n_agents=7"]) == 2
    assert "n_agents (7) must not exceed the number of markers (6)" in capsys.readouterr().err


@pytest.mark.parametrize("text,code", [("bogus: 1\n", 2), ("a: [1,\n", 5), ("- 1\n- 2\n", 5)])
def test_config_errors(tmp_path, text, code):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == code


def test_missing_files(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.yaml")]) == 4
    assert main(["trace-check", str(tmp_path / "none.jsonl")]) == 4


def test_bad_set_syntax(config, tmp_path):
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "o"), "--set", "novalue"]) == 2


def test_breach_exits_3_and_keeps_partial_log(config, tmp_path):
    out = tmp_path / "breach"
    code = main(["run", "--config", str(config), "--out", str(out),
                 "--set", "gating.stationary_var_max=20", "--set", "gating.resume_var_min=40"])
    assert code == 3
    assert (out / "events.jsonl").exists() and (out / "diagnostic.json").exists()


def test_compare_rows(config, tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(config), "--out", str(out), "--seed", "1,2", "--seed", "3"]) == 0
    with open(out / "compare.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    assert list(rows[0]) == ["seed", "mode", "duty_cycle", "losses", "rewards", "max_concurrent",
                             "pushes_proxy", "violations"]
    assert {r["mode"] for r in rows} == {"AnchorPlay", "BaselineAlwaysOn"}
    assert all(float(r["duty_cycle"]) == 1.0 for r in rows if r["mode"] == "BaselineAlwaysOn")


def test_out_dir_from_environment(config, tmp_path, monkeypatch):
    monkeypatch.setenv("ANCHORPLAY_OUT", str(tmp_path / "env"))
    assert main(["run", "--config", str(config)]) == 0
    assert (tmp_path / "env" / "metrics.json").exists()


def test_seed_list():
    assert _seed_list(["1,2", "5-7", " 9 "]) == [1, 2, 5, 6, 7, 9]


def test_module_entry_point(config, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "anchorplay", "run", "--config", str(config),
                           "--out", str(tmp_path / "m")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
