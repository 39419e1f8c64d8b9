import json
import subprocess

import numpy as np
import pytest

from mbnet import (
    MbnConfig,
    SparseCode,
    ensemble_to_json,
    load_code,
    make_blobs,
    model_to_json,
    save_code,
    train_bottom,
    train_mbn,
    write_csv,
)
from mbnet.cli import main


@pytest.fixture(scope="module")
def blobs_csv(tmp_path_factory):
    ds = make_blobs(seed=9, c=3, per_cluster=8, d=3, separation=30.0, spread=1.0)
    path = tmp_path_factory.mktemp("data") / "blobs.csv"
    write_csv(ds, path)
    return str(path)


def run_cli(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured


class TestRun:
    def test_summary_line(self, blobs_csv, capsys, tmp_path):
        rc, cap = run_cli(capsys, [
            "run", "--dataset", blobs_csv, "--label-column", "3",
            "--pipeline", "mbn_default", "--runs", "2", "--seed", "4",
            "--set", "clusterings_per_layer=20", "--set", "top_k=5",
            "--output-dir", str(tmp_path),
        ])
        assert rc == 0
        line = json.loads(cap.out)
        assert line["pipeline"] == "mbn_default"
        assert line["acc_mean"] == 1.0
        assert line["seconds"] >= 0
        assert (tmp_path / "report.json").exists()

    def test_set_overrides_config_file(self, blobs_csv, capsys, tmp_path):
        cfg_path = tmp_path / "exp.json"
        cfg_path.write_text(json.dumps({
            "pipeline": "mbn_default", "runs": 1, "seed": 0,
            "clusterings_per_layer": 20, "top_k": 5,
            "dataset": blobs_csv, "label_column": 3,
        }))
        rc, cap = run_cli(capsys, [
            "run", "--config", str(cfg_path), "--set", 'pipeline="mbn_e"',
            "--set", "n_models=3",
        ])
        assert rc == 0
        assert json.loads(cap.out)["pipeline"] == "mbn_e"

    def test_missing_dataset_reports_json_error(self, capsys):
        rc, cap = run_cli(capsys, [
            "run", "--dataset", "/nonexistent/file.csv",
            "--pipeline", "mbn_default", "--set", "top_k=4",
        ])
        assert rc == 1
        assert cap.out == ""
        err = json.loads(cap.err)
        assert "error" in err and "message" in err

    def test_bad_config_key_reports_json_error(self, blobs_csv, capsys):
        rc, cap = run_cli(capsys, [
            "run", "--dataset", blobs_csv, "--label-column", "3",
            "--pipeline", "mbn_default", "--set", "n_model=3",
        ])
        assert rc == 1
        assert json.loads(cap.err)["error"] == "ConfigError"


class TestSweeps:
    def test_sweep_delta_rows(self, blobs_csv, capsys):
        # the sweep forces the fixed-delta pipeline per grid point
        rc, cap = run_cli(capsys, [
            "sweep-delta", "--dataset", blobs_csv, "--label-column", "3",
            "--pipeline", "mbn_default", "--runs", "1", "--seed", "2",
            "--set", "clusterings_per_layer=20", "--set", "top_k=5",
            "--grid", "0.3,0.6",
        ])
        assert rc == 0
        rows = json.loads(cap.out)["rows"]
        assert [r["delta"] for r in rows] == [0.3, 0.6]
        assert all("acc_mean" in r for r in rows)

    def test_sweep_b_rows(self, blobs_csv, capsys):
        rc, cap = run_cli(capsys, [
            "sweep-b", "--dataset", blobs_csv, "--label-column", "3",
            "--pipeline", "mbn_sd", "--runs", "1", "--seed", "2",
            "--set", "clusterings_per_layer=20", "--set", "n_models=4",
            "--set", "top_k=5", "--grid", "1,4",
        ])
        assert rc == 0
        rows = json.loads(cap.out)["rows"]
        assert [r["b"] for r in rows] == [1, 4]


class TestEncode:
    def test_round_trips_training_code(self, capsys, tmp_path):
        ds = make_blobs(seed=3, c=3, per_cluster=8, d=3, separation=30.0, spread=1.0)
        base = MbnConfig(delta=0.5, clusterings_per_layer=20, top_k=5, seed=6)
        bottom = train_bottom(ds, base)
        model = train_mbn(bottom, base)
        model_path = tmp_path / "model.json"
        model_path.write_text(json.dumps(model_to_json(model)))
        code_path = tmp_path / "bottom.json"
        save_code(SparseCode((bottom.output,)), code_path)
        out_path = tmp_path / "encoded.json"

        rc, cap = run_cli(capsys, [
            "encode", "--model", str(model_path), "--code", str(code_path),
            "--out", str(out_path),
        ])
        assert rc == 0
        assert json.loads(cap.out) == {"out": str(out_path), "n": 24}
        assert load_code(out_path).equals(model.output_code)


class TestSelect:
    def test_select_writes_artifacts(self, tiny_ensemble, capsys, tmp_path):
        ens_path = tmp_path / "ens.json"
        ens_path.write_text(json.dumps(ensemble_to_json(tiny_ensemble)))
        out = tmp_path / "sel"
        rc, cap = run_cli(capsys, [
            "select", "--ensemble", str(ens_path), "--mode", "so",
            "--criterion", "VRC", "--n-classes", "4",
            "--output-dir", str(out),
        ])
        assert rc == 0
        line = json.loads(cap.out)
        assert len(line["weights"]) == tiny_ensemble.n_models
        assert len(line["chosen"]) == 3
        assert json.loads((out / "selection.json").read_text())["mode"] == "so"
        assert (out / "weights.csv").exists()
        assert (out / "weights.svg").exists()
        picked = load_code(out / "selected_code.json")
        assert len(picked.blocks) == 3

    def test_missing_criterion_is_reported(self, tiny_ensemble, capsys, tmp_path):
        ens_path = tmp_path / "ens.json"
        ens_path.write_text(json.dumps(ensemble_to_json(tiny_ensemble)))
        rc, cap = run_cli(capsys, [
            "select", "--ensemble", str(ens_path), "--mode", "so",
            "--n-classes", "4",
        ])
        assert rc == 1
        assert json.loads(cap.err)["error"] == "ConfigError"


class TestEval:
    def test_clusters_embedding_against_truth(self, capsys, tmp_path):
        rng = np.random.default_rng(1)
        emb = rng.normal(size=(30, 2))
        emb[10:20] += 40.0
        emb[20:] -= 40.0
        truth = np.repeat([0, 1, 2], 10)
        emb_path = tmp_path / "emb.csv"
        np.savetxt(emb_path, emb, delimiter=",")
        truth_path = tmp_path / "truth.csv"
        np.savetxt(truth_path, truth, fmt="%d")
        out_path = tmp_path / "result.json"

        rc, cap = run_cli(capsys, [
            "eval", "--embedding", str(emb_path), "--truth", str(truth_path),
            "--n-classes", "3", "--out", str(out_path),
        ])
        assert rc == 0
        assert json.loads(cap.out) == {"c": 3, "acc": 1.0}
        doc = json.loads(out_path.read_text())
        assert len(doc["labels"]) == 30
        assert doc["accuracy"]["acc"] == 1.0

    def test_truth_is_optional(self, capsys, tmp_path):
        emb_path = tmp_path / "emb.csv"
        np.savetxt(emb_path, np.vstack([np.zeros((5, 2)), np.ones((5, 2)) * 9]),
                   delimiter=",")
        rc, cap = run_cli(capsys, ["eval", "--embedding", str(emb_path),
                                   "--n-classes", "2"])
        assert rc == 0
        assert json.loads(cap.out) == {"c": 2}


def test_console_script_is_installed():
    proc = subprocess.run(["mbnet", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "sweep-delta" in proc.stdout
