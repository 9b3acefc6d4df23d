import csv
import json
import subprocess
import sys

import pytest

from dkpz.cli import main
from dkpz.harness import shipped_config


@pytest.fixture
def config_file(tmp_path):
    def write(name, **changes):
        cfg = shipped_config(name)
        data = cfg.to_dict()
        data.update(changes)
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(data))
        return str(path)
    return write


def test_validate_ok_and_failure(config_file, capsys):
    assert main(["validate", "--config", config_file("heat_average")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["passed"] and set(out["checks"]) == {"equivariance", "monotonicity", "symmetry", "contraction"}
    bad = config_file("heat_average", driving={"kind": "nonmonotone", "params": {}})
    assert main(["validate", "--config", bad]) == 1


def test_coeffs_json(config_file, capsys):
    assert main(["coeffs", "--config", config_file("parity_logsumexp")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["branch"] == "kpz"
    assert out["beta"] == pytest.approx(0.5, abs=1e-8)


def test_coeffs_non_smooth(config_file):
    path = config_file("heat_average", driving={"kind": "lpp_max", "params": {}})
    assert main(["coeffs", "--config", path]) == 1


def test_evolve_csv(config_file, tmp_path):
    out = tmp_path / "slice.csv"
    assert main(["evolve", "--config", config_file("kpz_gradient_form"), "--epsilon", "0.1",
                 "--steps", "4", "--radius", "3", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x1", "height"]
    assert [int(r[0]) for r in rows[1:]] == list(range(-3, 4))


def test_walk_csv(tmp_path):
    out = tmp_path / "walk.csv"
    assert main(["walk", "--alpha", "0", "--beta", "0.5", "--times", "4,16,64", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,sup_err,scaled_err,fitted_order" and len(lines) == 4


def test_limit_points(config_file, capsys):
    assert main(["limit", "--config", config_file("heat_average"), "--points", "1:0;0.5:1"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["t", "x1", "f"]
    assert float(rows[1][2]) == pytest.approx(0.6065306597126334, abs=1e-12)


def test_sweep_and_duhamel(config_file, tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", config_file("heat_average"), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4
    assert main(["duhamel", "--config", config_file("heat_average"), "--point", "1:0"]) == 0
    assert json.loads(capsys.readouterr().out)["residual"] < 1e-10


def test_exit_codes_for_failures(config_file, tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x")]) == 3
    hard = config_file("parity_logsumexp", tolerances={"quadrature": 1e-18})
    assert main(["limit", "--config", hard, "--points", "1:0"]) == 2


def test_module_entry_point(config_file):
    proc = subprocess.run([sys.executable, "-m", "dkpz", "coeffs", "--config", config_file("frozen_identity")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["branch"] == "frozen"
