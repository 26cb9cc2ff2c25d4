import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from flexifuzz.classifier import load_model, predict
from flexifuzz.cli import main
from flexifuzz.dataio import load_csv
from flexifuzz.evaluation.metrics import evaluate
from flexifuzz.experiment import Protocol, fit_and_score, prepare
from flexifuzz.families import GridPoint
from flexifuzz.reports import read_csv_table

DATA = Path(__file__).parent / "data"
LABELS = ["--label-map", "0:-1,1:1"]


@pytest.fixture
def workdir(tmp_path):
    for name in ("blobs_a.csv", "blobs_b.csv", "manifest.json", "single_class.csv",
                 "rank_matrix.csv"):
        shutil.copy(DATA / name, tmp_path / name)
    return tmp_path


def write_manifest(path, **overrides):
    doc = json.loads((DATA / "manifest.json").read_text())
    doc.update(overrides)
    path.write_text(json.dumps(doc))
    return path


def snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestTrain:
    def test_defaults_round_trip(self, workdir, capsys):
        out = workdir / "m.json"
        assert main(["train", "--data", str(workdir / "blobs_a.csv"), *LABELS, "--out", str(out)]) == 0
        text = capsys.readouterr().out
        assert "60 samples" in text and "I.R. 2" in text and "residual" in text
        model = load_model(out)
        doc = json.loads(out.read_text())
        assert doc["provenance"]["seed"] == 0 and doc["provenance"]["inputs"]["data"].startswith("sha256:")
        ds = load_csv(workdir / "blobs_a.csv", "label", {"0": -1, "1": 1})
        pred = predict(model, model.standardizer.transform(ds.X))
        assert evaluate(ds.y, pred).accuracy > 0.8

    def test_missing_file(self, workdir, capsys):
        missing = workdir / "absent.csv"
        assert main(["train", "--data", str(missing), *LABELS]) == 2
        assert str(missing) in capsys.readouterr().err

    def test_single_class(self, workdir, capsys):
        assert main(["train", "--data", str(workdir / "single_class.csv"), *LABELS]) == 2
        assert "requires both classes" in capsys.readouterr().err

    def test_label_map_required(self, workdir, capsys):
        assert main(["train", "--data", str(workdir / "blobs_a.csv")]) == 2

    def test_numerical_failure(self, tmp_path, capsys):
        path = tmp_path / "dup.csv"
        path.write_text("x1,label\n0.0,1\n0.0,0\n1.0,1\n")
        assert main(["train", "--data", str(path), *LABELS, "--model", "lssvm", "--C", "1e300"]) == 3
        assert "numerical" in capsys.readouterr().err

    def test_bad_flag_value(self, workdir):
        assert main(["train", "--data", str(workdir / "blobs_a.csv"), *LABELS, "--C", "abc"]) == 2


class TestPredict:
    def test_predictions_file(self, workdir, capsys):
        model = workdir / "m.json"
        main(["train", "--data", str(workdir / "blobs_a.csv"), *LABELS, "--out", str(model)])
        out = workdir / "pred.csv"
        assert main(["predict", "--model-file", str(model), "--data", str(workdir / "blobs_a.csv"),
                     *LABELS, "--out", str(out)]) == 0
        header, rows = read_csv_table(out)
        assert header == ["index", "decision_value", "predicted", "label"] and len(rows) == 60
        assert "accuracy" in capsys.readouterr().out

    def test_feature_mismatch(self, workdir):
        model = workdir / "m.json"
        main(["train", "--data", str(workdir / "blobs_a.csv"), *LABELS, "--out", str(model)])
        assert main(["predict", "--model-file", str(model), "--data", str(workdir / "blobs_b.csv"), *LABELS]) == 2


class TestBenchmark:
    def test_shape_contract(self, workdir):
        assert main(["benchmark", str(workdir / "manifest.json"), "--out", str(workdir / "r")]) == 0
        reports = sorted(p.name for p in (workdir / "r" / "reports").glob("*.json"))
        assert reports == ["blobs_a.json", "blobs_b.json"]
        header, rows = read_csv_table(workdir / "r" / "accuracy_matrix.csv")
        assert header == ["dataset", "flexi2", "lssvm"] and [r[0] for r in rows] == ["blobs_a", "blobs_b"]
        doc = json.loads((workdir / "r" / "reports" / "blobs_a.json").read_text())
        assert doc["provenance"]["seed"] == 7 and doc["provenance"]["version"]
        assert set(doc["provenance"]["inputs"]) == {"manifest", "blobs_a", "blobs_b"}
        res = doc["results"][0]
        assert {"accuracy", "sensitivity", "specificity", "precision", "hyperparameters"} <= set(res)
        assert (workdir / "r" / "cv" / "blobs_a.flexi2.csv").is_file()

    def test_rerun_is_byte_identical(self, workdir):
        main(["benchmark", str(workdir / "manifest.json"), "--out", str(workdir / "a")])
        main(["benchmark", str(workdir / "manifest.json"), "--out", str(workdir / "b")])
        assert snapshot(workdir / "a") == snapshot(workdir / "b")

    def test_matrix_feeds_stats(self, workdir, capsys):
        main(["benchmark", str(workdir / "manifest.json"), "--out", str(workdir / "r")])
        assert main(["stats", str(workdir / "r" / "accuracy_matrix.csv")]) == 0

    def test_partial_failure_exit_code(self, workdir):
        manifest = write_manifest(workdir / "bad.json", grid={"C": [1], "sigma": [1], "lambda": [1], "k": [80]})
        assert main(["benchmark", str(manifest), "--out", str(workdir / "r")]) == 4
        doc = json.loads((workdir / "r" / "reports" / "blobs_a.json").read_text())
        status = {r["model"]: r["status"] for r in doc["results"]}
        assert status == {"flexi2": "failed", "lssvm": "ok"}
        _, rows = read_csv_table(workdir / "r" / "accuracy_matrix.csv")
        assert rows[0][1] == "" and rows[0][2] != ""

    def test_missing_dataset_in_manifest(self, workdir, capsys):
        doc = json.loads((DATA / "manifest.json").read_text())
        doc["datasets"][0]["path"] = "nowhere.csv"
        (workdir / "m2.json").write_text(json.dumps(doc))
        assert main(["benchmark", str(workdir / "m2.json")]) == 2
        assert "nowhere.csv" in capsys.readouterr().err


class TestNoiseSweep:
    def test_zero_rate_reproduces_benchmark(self, workdir):
        main(["benchmark", str(workdir / "manifest.json"), "--out", str(workdir / "b")])
        main(["noise-sweep", str(workdir / "manifest.json"), "--out", str(workdir / "n"), "--noise-rates", "0"])
        _, bench = read_csv_table(workdir / "b" / "accuracy_matrix.csv")
        for row in bench:
            _, noise = read_csv_table(workdir / "n" / "noise" / f"{row[0]}.csv")
            assert noise[0][0] == "0.0" and noise[0][1:] == row[1:]

    def test_default_rates_give_five_rows(self, workdir):
        manifest = workdir / "m.json"
        doc = json.loads((DATA / "manifest.json").read_text())
        del doc["noise_rates"]
        doc["datasets"] = doc["datasets"][:1]
        manifest.write_text(json.dumps(doc))
        assert main(["noise-sweep", str(manifest), "--out", str(workdir / "n")]) == 0
        _, rows = read_csv_table(workdir / "n" / "noise" / "blobs_a.csv")
        assert [r[0] for r in rows] == ["0.05", "0.1", "0.2", "0.3", "0.4", "average"]
        doc = json.loads((workdir / "n" / "noise" / "blobs_a.json").read_text())
        assert [r["flipped_labels"] for r in doc["rates"]] == [2, 4, 8, 13, 17]  # round(r * 42)
        acc = [float(r[1]) for r in rows[:5]]
        assert float(rows[5][1]) == pytest.approx(np.mean(acc))

    def test_rerun_identical(self, workdir):
        main(["noise-sweep", str(workdir / "manifest.json"), "--out", str(workdir / "a")])
        main(["noise-sweep", str(workdir / "manifest.json"), "--out", str(workdir / "b")])
        assert snapshot(workdir / "a") == snapshot(workdir / "b")

    def test_bad_rate(self, workdir):
        assert main(["noise-sweep", str(workdir / "manifest.json"), "--noise-rates", "1.5"]) == 2


class TestSensitivity:
    def run(self, workdir, *extra):
        out = workdir / "s.csv"
        code = main(["sensitivity", "--data", str(workdir / "blobs_a.csv"), *LABELS, "--out", str(out), *extra])
        return code, out

    def test_c_sigma_default_grid(self, workdir):
        code, out = self.run(workdir, "--model", "lssvm", "--axes", "C,sigma")
        assert code == 0
        header, rows = read_csv_table(out)
        assert header == ["C", "sigma", "accuracy"] and len(rows) == 121

    def test_lambda_k_default_grid(self, workdir):
        code, out = self.run(workdir, "--model", "flexi1", "--axes", "lambda,k",
                             "--C", "0.1,1,10", "--sigma", "0.5,1,2")
        assert code == 0
        header, rows = read_csv_table(out)
        assert header == ["lambda", "k", "accuracy"] and len(rows) == 100

    def test_single_point_equals_direct_path(self, workdir):
        code, out = self.run(workdir, "--model", "flexi2", "--axes", "C,sigma", "--C", "10", "--sigma", "1",
                             "--lambda", "2", "--k", "3", "--seed", "4")
        assert code == 0
        _, rows = read_csv_table(out)
        assert len(rows) == 1
        ds = load_csv(workdir / "blobs_a.csv", "label", {"0": -1, "1": 1})
        prepared = prepare(ds, Protocol(seed=4))
        _, _, scores = fit_and_score(prepared, "flexi2", GridPoint(10.0, 1.0, 2.0, 3))
        assert float(rows[0][2]) == scores.accuracy

    def test_unsupported_axes(self, workdir):
        assert self.run(workdir, "--axes", "C,k")[0] == 2
        assert self.run(workdir, "--model", "lssvm", "--axes", "lambda,k")[0] == 2


class TestStats:
    def test_reconstructed_rank_matrix(self, workdir, capsys):
        out = workdir / "stats.json"
        assert main(["stats", str(workdir / "rank_matrix.csv"), "--q-alpha", "3.102", "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["chi2"] == pytest.approx(39.15, abs=0.01)
        assert rep["f_stat"] == pytest.approx(5.65, abs=0.01)
        assert rep["cd"] == pytest.approx(2.1934, abs=5e-4)
        assert "Nemenyi CD = 2.1934" in capsys.readouterr().out

    def test_bundled_q_for_nine_models(self, workdir):
        out = workdir / "stats.json"
        main(["stats", str(workdir / "rank_matrix.csv"), "--out", str(out)])
        assert json.loads(out.read_text())["q_alpha"] == 3.102

    def test_two_models_strictly_ordered(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("dataset,A,B\nd1,0.9,0.8\nd2,0.7,0.6\nd3,0.95,0.5\n")
        out = tmp_path / "s.json"
        assert main(["stats", str(path), "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["avg_ranks"] == {"A": 1.0, "B": 2.0}
        assert rep["f_stat"] is None and rep["chi2"] == pytest.approx(3.0)

    def test_identical_matrix(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("dataset,A,B,C\nd1,0.8,0.8,0.8\nd2,0.7,0.7,0.7\n")
        out = tmp_path / "s.json"
        assert main(["stats", str(path), "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["chi2"] == 0.0 and not any(p["significant"] for p in rep["pairwise_flags"])

    def test_missing_entries(self, tmp_path, capsys):
        path = tmp_path / "m.csv"
        path.write_text("dataset,A,B\nd1,0.9,\nd2,0.7,0.6\n")
        assert main(["stats", str(path)]) == 2
        assert "missing" in capsys.readouterr().err


def test_module_entry_point(workdir):
    proc = subprocess.run([sys.executable, "-m", "flexifuzz", "stats", str(workdir / "rank_matrix.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "Friedman" in proc.stdout
