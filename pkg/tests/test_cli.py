import json

import pytest

from arpsentry.cli import main
from arpsentry.manifest import sha256_file


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Small end-to-end run shared by the CLI tests."""
    out = tmp_path_factory.mktemp("pipeline")
    assert run("simulate", "--devices", 12, "--attacks", 4, "--duration", 900,
               "--seed", 5, "--out", out) == 0
    assert run("split", "--trace", out / "trace.jsonl", "--fraction", "0.5",
               "--seed", 5, "--episodes", out / "episodes.jsonl",
               "--out", out) == 0
    assert run("train", "--trace", out / "train.jsonl", "--model", "ensemble",
               "--members", "logistic,tree,forest", "--seed", 5,
               "--out", out) == 0
    assert run("detect", "--model", out / "model.json", "--trace",
               out / "test.jsonl", "--out", out) == 0
    assert run("aggregate", "--logs", out / "edgelog.json", "--out", out) == 0
    assert run("evaluate", "--predictions", out / "predictions.csv",
               "--edge-log", out / "edgelog.json", "--tau-sweep", "0.1:0.9:9",
               "--out", out) == 0
    return out


class TestSimulate:
    def test_missing_seed_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run("simulate", "--devices", 5, "--out", tmp_path)
        assert exc.value.code == 2

    def test_benign_trace(self, tmp_path):
        assert run("simulate", "--devices", 5, "--attacks", 0, "--duration",
                   120, "--seed", 1, "--out", tmp_path) == 0
        content = (tmp_path / "trace.jsonl").read_text()
        assert '"label":1' not in content

    def test_manifest_written(self, pipeline):
        manifest = json.loads((pipeline / "manifest_simulate.json").read_text())
        assert manifest["subcommand"] == "simulate"
        assert manifest["config"]["seed"] == 5
        assert str(pipeline / "trace.jsonl") in manifest["outputs"]


class TestTrain:
    def test_ensemble_has_three_members(self, pipeline):
        doc = json.loads((pipeline / "model.json").read_text())
        assert doc["kind"] == "ensemble"
        assert [m["kind"] for m in doc["members"]] == ["logistic", "tree", "forest"]

    def test_corrupt_feature_csv_exits_one(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("ts,src_node,r,v,c,dt,h,label\n1,n1,oops,0,0,0,0,1\n")
        assert run("train", "--features", bad, "--seed", 1, "--model",
                   "logistic", "--out", tmp_path) == 1

    def test_degenerate_labels_exit_one(self, tmp_path):
        assert run("simulate", "--devices", 5, "--attacks", 0, "--duration",
                   120, "--seed", 2, "--out", tmp_path) == 0
        assert run("train", "--trace", tmp_path / "trace.jsonl", "--model",
                   "logistic", "--seed", 1, "--out", tmp_path) == 1

    def test_separable_fixture_perfect_holdout(self, tmp_path, capsys):
        lines = ["ts,src_node,r,v,c,dt,h,label"]
        for i in range(40):
            label = i % 2
            lines.append(f"{i}.0,n1,{label * 0.8},0.0,0.5,1.0,{label},{label}")
        features = tmp_path / "features.csv"
        features.write_text("\n".join(lines) + "\n")
        assert run("train", "--features", features, "--model", "logistic",
                   "--seed", 3, "--val-split", "0.25", "--out", tmp_path) == 0


class TestDetect:
    def test_gamma_zero_alerts_every_window_with_detection(self, pipeline,
                                                           tmp_path):
        assert run("detect", "--model", pipeline / "model.json", "--trace",
                   pipeline / "test.jsonl", "--gamma", "0", "--no-smoothing",
                   "--out", tmp_path) == 0
        windows = (tmp_path / "windows.csv").read_text().strip().splitlines()[1:]
        for line in windows:
            _, _, positives, _, _, alert = line.split(",")
            assert (int(alert) == 1) == (int(positives) > 0)

    def test_deterministic_outputs(self, pipeline, tmp_path):
        for name in ("a", "b"):
            (tmp_path / name).mkdir()
            assert run("detect", "--model", pipeline / "model.json", "--trace",
                       pipeline / "test.jsonl", "--out", tmp_path / name) == 0
        for artifact in ("alerts.jsonl", "windows.csv", "predictions.csv",
                         "edgelog.json"):
            assert sha256_file(tmp_path / "a" / artifact) == sha256_file(
                tmp_path / "b" / artifact
            )

    def test_multi_edge_outputs(self, pipeline, tmp_path):
        assert run("detect", "--model", pipeline / "model.json", "--trace",
                   pipeline / "test.jsonl", "--edges", 3, "--out",
                   tmp_path) == 0
        logs = sorted(p.name for p in tmp_path.glob("edgelog_*.json"))
        assert len(logs) == 3

    def test_missing_model_exits_one(self, pipeline, tmp_path):
        assert run("detect", "--model", tmp_path / "nope.json", "--trace",
                   pipeline / "test.jsonl", "--out", tmp_path) == 1


class TestAggregate:
    def test_tau_one_no_directives(self, pipeline, tmp_path):
        assert run("aggregate", "--logs", pipeline / "edgelog.json", "--tau",
                   "1.0", "--isolate-above", "1.0", "--out", tmp_path) == 0
        assert (tmp_path / "directives.jsonl").read_text() == ""

    def test_tau_zero_with_detections_directs(self, pipeline, tmp_path):
        assert run("aggregate", "--logs", pipeline / "edgelog.json", "--tau",
                   "0", "--out", tmp_path) == 0
        assert (tmp_path / "directives.jsonl").read_text().strip()


class TestEvaluate:
    def test_metrics_schema(self, pipeline):
        obj = json.loads((pipeline / "metrics.json").read_text())
        assert "accuracy" in obj and "fpr" in obj

    def test_tau_sweep_monotone(self, pipeline):
        lines = (pipeline / "tau_sweep.csv").read_text().strip().splitlines()[1:]
        counts = [int(line.split(",")[1]) for line in lines]
        assert all(b <= a for a, b in zip(counts, counts[1:]))

    def test_rerun_identical(self, pipeline, tmp_path):
        assert run("evaluate", "--predictions", pipeline / "predictions.csv",
                   "--out", tmp_path) == 0
        assert sha256_file(tmp_path / "metrics.json") == sha256_file(
            pipeline / "metrics.json"
        )

    def test_unlabeled_predictions_exit_one(self, tmp_path):
        path = tmp_path / "predictions.csv"
        path.write_text("ts,src_node,pred,prob,label\n1.0,n1,0,0.1,-1\n")
        assert run("evaluate", "--predictions", path, "--out", tmp_path) == 1


class TestReport:
    def test_figures_rendered(self, pipeline):
        assert run("report", "--dir", pipeline) == 0
        for name in ("fig_accuracy_over_time.png", "fig_fpr.png",
                     "fig_tau_sweep.png"):
            assert (pipeline / name).stat().st_size > 0

    def test_empty_dir_exits_one(self, tmp_path):
        assert run("report", "--dir", tmp_path) == 1


class TestConfigFile:
    def test_config_defaults_with_flag_override(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"devices": 6, "attacks": 0}))
        assert run("simulate", "--config", config, "--duration", 120,
                   "--seed", 9, "--attacks", 1, "--out", tmp_path) == 0
        manifest = json.loads((tmp_path / "manifest_simulate.json").read_text())
        assert manifest["config"]["devices"] == 6  # from config file
        assert manifest["config"]["attacks"] == 1  # flag overrides config
