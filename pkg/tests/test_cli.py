import json
import subprocess
import sys

import pytest

from roughscat import experiments as ex
from roughscat.cli import main


@pytest.fixture
def config(tmp_path):
    data = ex.standard_scene_config(0.25).to_dict()
    data["measurement"] = {"b": 1.0, "c": 1.0, "source_range": [-1, 1], "receiver_range": [-1, 1],
                           "n_sources": 2, "n_receivers": 2}
    data["approach"] = {"j_max": 6}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return p


def run(args, capsys):
    code = main(args)
    return code, capsys.readouterr().out


def test_solve(config, tmp_path, capsys):
    out = tmp_path / "o"
    code, text = run(["solve", "--config", str(config), "--out", str(out), "--dump-matrix"], capsys)
    assert code == 0 and text.startswith("solve: PASS")
    for f in ("field_nodes.csv", "receiver_line.csv", "mesh.txt", "matrix.txt", "solve_log.json"):
        assert (out / f).stat().st_size > 0
    assert json.loads((out / "solve_log.json").read_text())["residual"] <= 1e-10


def test_dataset_and_tolerance_failure(config, tmp_path, capsys):
    out = tmp_path / "o"
    code, text = run(["dataset", "--config", str(config), "--out", str(out)], capsys)
    assert code == 0 and "PASS" in text
    assert (out / "dataset.csv").read_text().startswith("# format=roughscat-dataset-v1")
    code, text = run(["dataset", "--config", str(config), "--out", str(out), "--tol", "1e-14"], capsys)
    assert code == 1 and "FAIL" in text


def test_oracle_default_config(tmp_path, capsys):
    code, text = run(["oracle", "--out", str(tmp_path)], capsys)
    assert code == 0 and (tmp_path / "oracle.csv").exists()


def test_approach_short(config, tmp_path, capsys):
    code, text = run(["approach", "--config", str(config), "--out", str(tmp_path), "--mesh-h", "0.3"], capsys)
    assert (tmp_path / "approach.csv").read_text().count("\n") == 7
    assert text.startswith("approach:")


def test_invalid_input_exit_code(tmp_path, capsys):
    data = ex.standard_scene_config(0.3).to_dict()
    data["k2_sq"] = {"re": 4.0, "im": 0.0}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(data))
    assert main(["solve", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "ERROR" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "roughscat.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "dataset" in r.stdout
