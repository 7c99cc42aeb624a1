import json
import os

import numpy as np
import pytest

from infodyn import cli, entproj, experiments
from infodyn.cli import main


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(tmp_path, cfg, out="out", *extra, command="run"):
    code = main([command, write(tmp_path, cfg), "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


def test_list(capsys):
    assert main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) >= 9
    names = {line.split()[0] for line in lines}
    assert {"dice", "gibbs-qubit", "luders", "bayes-recovery", "cocycle-limit"} <= names


@pytest.mark.parametrize("name", sorted(experiments.EXPERIMENTS))
def test_every_template_round_trips_and_is_deterministic(name, tmp_path, capsys):
    assert main(["--template", name]) == 0
    cfg = json.loads(capsys.readouterr().out)
    experiments.validate(cfg)
    code, out1 = run(tmp_path, cfg, "a")
    assert code == 0
    code, out2 = run(tmp_path, cfg, "b")
    assert code == 0
    assert (out1 / "result.csv").read_bytes() == (out2 / "result.csv").read_bytes()
    r1, r2 = (json.loads((o / "result.json").read_text()) for o in (out1, out2))
    r1.pop("wall_time_s"), r2.pop("wall_time_s")
    assert r1 == r2


def test_unknown_template(capsys):
    assert main(["--template", "nope"]) == 1


def test_malformed_json_writes_nothing(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{\"experiment\": \"dice\",")
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out)]) == 1
    assert not out.exists()
    assert main(["run", str(tmp_path / "missing.json"), "--out", str(out)]) == 1
    assert main(["run", write(tmp_path, [1, 2]), "--out", str(out)]) == 1
    assert not out.exists()


def test_schema_errors(tmp_path):
    assert run(tmp_path, {"experiment": "dice", "gamma": 2.0})[0] == 1
    assert run(tmp_path, {"experiment": "warp-drive"})[0] == 1
    assert run(tmp_path, {"experiment": "dice", "faces": "123"})[0] == 1
    assert run(tmp_path, experiments.template("bayes-recovery"), "o", "--seed", "-1")[0] == 1


def test_dice_result(tmp_path):
    code, out = run(tmp_path, experiments.template("dice"))
    assert code == 0
    rec = json.loads((out / "result.json").read_text())
    row = rec["rows"][0]
    q = np.array([row[f"q_{i}"] for i in range(6)])
    assert abs(q @ np.arange(1, 7) - 4.5) < 1e-10
    assert row["mean_residual"] < 1e-10
    assert rec["input_digest"] == experiments.digest(rec["config"])
    header = (out / "result.csv").read_text().splitlines()[0].split(",")
    assert header[:2] == ["step", "t"]


def test_bayes_matches_direct_posterior(tmp_path):
    joint = [[0.1, 0.2, 0.05], [0.3, 0.15, 0.2]]
    code, out = run(tmp_path, {"experiment": "bayes-recovery", "joint": joint, "observed": 1})
    assert code == 0
    row = json.loads((out / "result.json").read_text())["rows"][0]
    post = np.array([row[f"posterior_{i}"] for i in range(3)])
    np.testing.assert_allclose(post, np.array(joint[1]) / 0.65, atol=1e-12)


def test_seed_and_mode_overrides(tmp_path):
    cfg = experiments.template("bayes-recovery")
    _, a = run(tmp_path, cfg, "a", "--seed", "1")
    _, b = run(tmp_path, cfg, "b", "--seed", "2")
    _, c = run(tmp_path, cfg, "c", "--seed", "1")
    assert (a / "result.csv").read_bytes() != (b / "result.csv").read_bytes()
    assert (a / "result.csv").read_bytes() == (c / "result.csv").read_bytes()
    assert json.loads((a / "result.json").read_text())["config"]["seed"] == 1
    cfg = experiments.template("trajectory-classical")
    _, lit = run(tmp_path, cfg, "lit", "--mode", "literal")
    _, ch = run(tmp_path, cfg, "ch", "--mode", "chained")
    assert json.loads((ch / "result.json").read_text())["config"]["mode"] == "chained"
    ql = [r["q_5"] for r in json.loads((lit / "result.json").read_text())["rows"]]
    qc = [r["q_5"] for r in json.loads((ch / "result.json").read_text())["rows"]]
    np.testing.assert_allclose(ql, qc, atol=1e-9)


def test_infeasible_exit_code(tmp_path):
    cfg = {"experiment": "project", "prior": [0.5, 0.5],
           "constraints": {"moments": [{"a": [0, 1], "c": 2.0}], "mass": 1.0}}
    code, out = run(tmp_path, cfg)
    assert code == 2
    assert not out.exists()
    cfg = {"experiment": "project", "gamma": 0.0, "prior": [0.5, 0.5],
           "constraints": {"support": [0], "mass": 1.0}}
    assert run(tmp_path, cfg)[0] == 2


def test_nonconvergence_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(entproj, "MAX_ITER", 1)
    code, out = run(tmp_path, experiments.template("dice"))
    assert code == 3
    assert not out.exists()


def test_qproject_subcommand(tmp_path):
    cfg = experiments.template("qproject")
    code, out = run(tmp_path, cfg, command="qproject")
    assert code == 0
    rec = json.loads((out / "result.json").read_text())
    assert rec["summary"]["kkt_residual"] < 1e-8
    cfg.pop("experiment")
    assert run(tmp_path, cfg, "o2", command="qproject")[0] == 0
    assert run(tmp_path, experiments.template("dice"), "o3", command="qproject")[0] == 1


def test_gibbs_qubit_result(tmp_path):
    code, out = run(tmp_path, experiments.template("gibbs-qubit"))
    assert code == 0
    row = json.loads((out / "result.json").read_text())["rows"][0]
    assert row["kkt_residual"] < 1e-8
    assert row["moment_residual"] < 1e-10


def test_default_output_directory(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = experiments.template("dice")
    cfg["output"] = "from_config"
    assert main(["run", write(tmp_path, cfg)]) == 0
    assert (tmp_path / "from_config" / "result.csv").exists()


def test_list_api():
    assert dict(cli.list_experiments()).keys() == experiments.EXPERIMENTS.keys()


def test_matrix_codec():
    M = np.array([[1.0, 2 - 1j], [2 + 1j, -3.0]])
    np.testing.assert_array_equal(experiments.decode_matrix(experiments.encode_matrix(M)), M)
    np.testing.assert_array_equal(experiments.decode_matrix([[1, 0], [0, 1]]), np.eye(2))
    with pytest.raises(experiments.ConfigError):
        experiments.decode_matrix({"n": 2, "entries": [[1, 0]]})


def test_atomic_write_leaves_no_temporaries(tmp_path):
    code, out = run(tmp_path, experiments.template("dice"))
    assert sorted(os.listdir(out)) == ["result.csv", "result.json"]
