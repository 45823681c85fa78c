import json

import numpy as np
import pytest

from koopseed.cli import main
from koopseed.model import load_matrix_csv

from test_experiments import tiny_config_dict


@pytest.fixture
def tiny_path(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(tiny_config_dict()))
    return str(path)


def test_derive_writes_seed(tiny_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["derive", "--config", tiny_path, "--out", str(out)]) == 0
    model = load_matrix_csv(out / "seed_matrix.csv")
    assert model.matrix.shape == (15, 15)
    assert "seed_matrix.csv" in capsys.readouterr().out


def test_derive_degree_override(tiny_path, tmp_path):
    out = tmp_path / "out"
    main(["derive", "--config", tiny_path, "--out", str(out), "--degree", "1"])
    model = load_matrix_csv(out / "seed_matrix.csv")
    assert model.matrix.shape == (5, 5)


def test_simulate_writes_trajectories(tiny_path, tmp_path):
    out = tmp_path / "out"
    main(["simulate", "--config", tiny_path, "--out", str(out), "--tests", "2"])
    train = (out / "train_seed0.csv").read_text().splitlines()
    assert train[0] == "t,x_1_1,x_1_2,x_2_1,x_2_2"
    assert len(train) == 1 + 261
    assert (out / "test_seed0_000.csv").exists()
    assert (out / "test_seed0_001.csv").exists()


def test_train_batch_and_online(tiny_path, tmp_path):
    out = tmp_path / "out"
    main(["simulate", "--config", tiny_path, "--out", str(out)])
    traj = str(out / "train_seed0.csv")
    main(["train-batch", "--config", tiny_path, "--traj", traj, "--out", str(out), "--pairs", "200"])
    batch = load_matrix_csv(out / "koopman_edmd_m200.csv")
    assert batch.matrix.shape == (15, 15)
    assert batch.diagnostics["method"] == "edmd"
    main(["train-online", "--config", tiny_path, "--traj", traj, "--out", str(out), "--pairs", "200"])
    online = load_matrix_csv(out / "koopman_online_m200.csv")
    assert online.matrix.shape == (15, 15)
    assert online.diagnostics["sigma"] == 1.0
    assert not np.array_equal(batch.matrix, online.matrix)


def test_eval_onestep_cli(tiny_path, tmp_path, capsys):
    out = tmp_path / "out"
    main(["eval-onestep", "--config", tiny_path, "--out", str(out), "--seeds", "1"])
    assert (out / "onestep_summary.csv").exists()
    assert (out / "onestep_raw_seed0_proposed.csv").exists()
    printed = capsys.readouterr().out
    assert "onestep" in printed and "130" in printed


def test_eval_onestep_no_raw(tiny_path, tmp_path):
    out = tmp_path / "out"
    main(["eval-onestep", "--config", tiny_path, "--out", str(out), "--seeds", "1", "--no-raw"])
    assert (out / "onestep_summary.csv").exists()
    assert not (out / "onestep_raw_seed0_proposed.csv").exists()


def test_eval_nstep_cli(tiny_path, tmp_path):
    out = tmp_path / "out"
    main([
        "eval-nstep", "--config", tiny_path, "--out", str(out),
        "--seeds", "1", "--pairs", "150", "--horizon", "5",
    ])
    lines = (out / "nstep_summary.csv").read_text().splitlines()
    assert lines[0] == "checkpoint_or_n,method,mean,std,count"
    assert len(lines) == 1 + 5 * 2


def test_spectrum_cli(tiny_path, tmp_path, capsys):
    out = tmp_path / "out"
    main(["spectrum", "--config", tiny_path, "--out", str(out), "--seeds", "1", "--pairs", "150"])
    assert (out / "spectrum_seed0_proposed.csv").exists()
    assert (out / "spectrum_counts.csv").exists()
    assert "count(|mu|>0.99)" in capsys.readouterr().out


def test_unknown_preset_fails_cleanly(tmp_path):
    with pytest.raises(FileNotFoundError):
        main(["derive", "--config", "nope", "--out", str(tmp_path)])
