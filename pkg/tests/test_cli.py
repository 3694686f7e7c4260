import csv
import json

import pytest

from frodo.cli import main

RUN_NO_MEMORY = """
[run]
rounds = 5000
x0 = [0.6, 0.8]

[graph]
fully_connected = 4

[objective]
family = "exp1"

[optimizer]
variant = "no_memory"
alpha = 0.8
"""

SMALL_EXP1 = """
[exp1]
draws = 2
uniform_starts = 1
rounds = 3000
write_runs = true
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_run_writes_converged_row(tmp_path, capsys):
    cfg = write(tmp_path, "run.toml", RUN_NO_MEMORY)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert "converged" in capsys.readouterr().out
    rows = list(csv.DictReader((out / "summary.csv").open()))
    assert len(rows) == 1
    assert rows[0]["status"] == "converged"
    assert rows[0]["variant"] == "no_memory"
    (record_path,) = (out / "runs").iterdir()
    record = json.loads(record_path.read_text())
    assert record["config"]["optimizer"] == {"variant": "no_memory", "alpha": 0.8}
    assert record["config"]["x_star"] == [0.0, 0.0]
    assert record["seed"] == 0
    # a second run appends instead of overwriting
    assert main(["run", "--config", str(cfg), "--out", str(out), "--seed", "4"]) == 0
    assert len(list(csv.DictReader((out / "summary.csv").open()))) == 2


def test_validate_rejects_lambda_out_of_range(tmp_path, capsys):
    text = RUN_NO_MEMORY.replace('variant = "no_memory"', 'variant = "fractional"\nbeta = 0.3\nlambda = 1.5\nhorizon = 10')
    cfg = write(tmp_path, "bad.toml", text)
    assert main(["validate", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "lambda" in err and "(0, 1)" in err


@pytest.mark.parametrize("edit, field", [
    (('variant = "no_memory"', 'variant = "sgd"'), "optimizer.variant"),
    (('variant = "no_memory"', 'variant = "no_memory"\nlambda = 0.5'), "optimizer.lambda"),
    (('variant = "no_memory"', 'variant = "fractional"\nlambda = 0.5\nhorizon = 5'), "optimizer.beta"),
    (("rounds = 5000", "rounds = 0"), "run.rounds"),
    (("x0 = [0.6, 0.8]", "x0 = [0.6]"), "run.x0"),
    (("fully_connected = 4", "fully_connected = 3"), "objective.family"),
])
def test_config_errors_name_the_field(tmp_path, capsys, edit, field):
    cfg = write(tmp_path, "c.toml", RUN_NO_MEMORY.replace(*edit))
    assert main(["validate", "--config", str(cfg)]) == 1
    assert field in capsys.readouterr().err


def test_unreadable_and_mismatched_configs(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "missing.toml")]) == 1
    assert main(["validate", "--config", str(write(tmp_path, "x.toml", "not = [valid"))]) == 1
    cfg = write(tmp_path, "run.toml", RUN_NO_MEMORY)
    assert main(["exp1", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_json_config_is_accepted(tmp_path):
    raw = {"run": {"rounds": 100, "x0": [1.0, 0.0]}, "graph": {"fully_connected": 4},
           "objective": {"family": "exp1"}, "optimizer": {"variant": "heavy_ball", "alpha": 0.9, "beta": 0.4}}
    cfg = write(tmp_path, "run.json", json.dumps(raw))
    assert main(["validate", "--config", str(cfg)]) == 0


def test_runtime_failure_exits_2(tmp_path, monkeypatch):
    monkeypatch.delenv("FRODO_MNIST_DIR", raising=False)
    cfg = write(tmp_path, "e2.toml", '[exp2]\ndata_source = "mnist"\nrepetitions = 1\nrounds = 2\n')
    assert main(["exp2", "--config", str(cfg), "--out", str(tmp_path / "o"), "--parallel", "1"]) == 2
    assert not (tmp_path / "o" / "report.json").exists()


def test_exp1_twice_is_byte_identical(tmp_path):
    cfg = write(tmp_path, "e1.toml", SMALL_EXP1)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["exp1", "--config", str(cfg), "--out", str(out), "--seed", "7", "--parallel", "1"]) == 0
        outs.append(out)
    files_a = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(outs[1]) for p in outs[1].rglob("*") if p.is_file())
    assert files_a == files_b
    assert len(files_a) == 2 + 3 * 2 * 5
    for rel in files_a:
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes()
    report = json.loads((outs[0] / "report.json").read_text())
    assert report["spec"]["seed"] == 7
    assert not any(p.name.endswith(".tmp") for p in outs[0].rglob("*"))


def test_exp2_outputs(tmp_path):
    cfg = write(tmp_path, "e2.toml", """
[exp2]
repetitions = 2
rounds = 10
samples_per_agent = 60
hidden = [4]
batch_size = 10
n_features = 12
data_source = "synthetic"
write_runs = true
""")
    out = tmp_path / "o"
    assert main(["exp2", "--config", str(cfg), "--out", str(out), "--parallel", "1"]) == 0
    curves = list(csv.DictReader((out / "curves.csv").open()))
    assert len(curves) == 5 * 2 * 11
    assert {r["variant"] for r in curves} == {"fractional", "plain_gd", "nesterov", "heavy_ball", "adam"}
    assert len(list((out / "runs").iterdir())) == 10
    report = json.loads((out / "report.json").read_text())
    assert report["spec"]["optimizers"]["fractional"]["lambda"] == 0.15
