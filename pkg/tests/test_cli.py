"""Tests for the diffan command line."""
import json

import numpy as np
import pandas as pd
import pytest

from conftest import chain
from diffan.cli.main import main
from diffan.exceptions import NumericalError, TrainingDivergedError
from diffan.models.dag import Dag
from diffan.services.bench import BENCH_COLUMNS


def flat(text):
    return " ".join(text.split())


@pytest.fixture
def generated(tmp_path, tiny_config):
    out = tmp_path / "gen"
    assert main(["generate", "--config", str(tiny_config), "--n", "60", "--seed", "1", "-o", str(out)]) == 0
    return out


class TestMain:
    def test_no_command_prints_help(self, capsys):
        assert main([]) == 0
        assert "discover" in capsys.readouterr().out

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert "diffan" in capsys.readouterr().out


class TestGenerate:
    def test_writes_outputs(self, generated):
        data = pd.read_csv(generated / "data.csv")
        truth = Dag.from_csv(generated / "truth.csv")
        assert data.shape == (60, 3)
        assert list(data.columns) == truth.labels
        manifest = json.loads((generated / "manifest.json").read_text())
        assert manifest['command'] == "generate"
        assert manifest['seeds']['data'] == 1
        assert manifest['outputs'] == ["data.csv", "spec.json", "truth.csv"]

    def test_single_node(self, tmp_path):
        assert main(["generate", "--d", "1", "--n", "20", "-o", str(tmp_path)]) == 0
        assert pd.read_csv(tmp_path / "data.csv").shape == (20, 1)

    def test_rerun_is_identical(self, tmp_path, tiny_config):
        for name in ("a", "b"):
            main(["generate", "--config", str(tiny_config), "--n", "30", "-o", str(tmp_path / name)])
        for name in ("data.csv", "truth.csv", "spec.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_bad_config_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("graph:\n  kind: lattice\n")
        assert main(["generate", "--config", str(path), "-o", str(tmp_path / "out")]) == 2
        assert "graph kind" in flat(capsys.readouterr().out)


class TestDiscover:
    def test_non_numeric_column(self, tmp_path, capsys):
        path = tmp_path / "data.csv"
        pd.DataFrame({'a': [1.0, 2.0, 3.0], 'b': ['1', 'x', '3']}).to_csv(path, index=False)
        assert main(["discover", str(path), "-o", str(tmp_path / "out")]) == 2
        out = flat(capsys.readouterr().out)
        assert "column 1" in out
        assert "not numeric" in out

    def test_end_to_end_and_checkpoint_reuse(self, generated, tiny_config, tmp_path, mocker):
        out = tmp_path / "fit"
        args = ["discover", str(generated / "data.csv"), "--config", str(tiny_config),
                "--truth", str(generated / "truth.csv"), "-o", str(out)]
        assert main(args) == 0
        for name in ("checkpoint.pt", "ordering.json", "graph.csv", "diagnostics.csv",
                     "variances.csv", "metrics.json", "manifest.json"):
            assert (out / name).exists()

        ordering = json.loads((out / "ordering.json").read_text())
        assert sorted(ordering) == ["X0", "X1", "X2"]
        metrics = json.loads((out / "metrics.json").read_text())
        assert set(metrics) == {'shd', 'sid', 'd_top', 'runtime_seconds'}
        assert Dag.from_csv(out / "graph.csv").d == 3
        assert list(pd.read_csv(out / "variances.csv").columns) == ['iteration', 'node', 'variance']
        trained = json.loads((out / "manifest.json").read_text())['training']
        assert trained['weights_epoch'] == trained['best_epoch']
        assert trained['best_val_loss'] <= trained['val_loss']

        mocker.patch("diffan.services.pipeline.fit_network", side_effect=AssertionError("retrained"))
        assert main(args + ["--skip-train-if-checkpoint", "--variant", "residue"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest['config']['ordering']['variant'] == "residue"
        assert manifest['training'] == trained

    def test_numerical_error_exits_3(self, generated, tiny_config, tmp_path, mocker):
        mocker.patch("diffan.cli.discover.discover", side_effect=NumericalError("non-finite Hessian diagonal"))
        assert main(["discover", str(generated / "data.csv"), "--config", str(tiny_config),
                     "-o", str(tmp_path / "out")]) == 3

    def test_divergence_reports_epoch(self, generated, tiny_config, tmp_path, mocker, capsys):
        mocker.patch("diffan.cli.discover.discover", side_effect=TrainingDivergedError("loss is nan", epoch=4))
        assert main(["discover", str(generated / "data.csv"), "--config", str(tiny_config),
                     "-o", str(tmp_path / "out")]) == 3
        assert "epoch 4" in flat(capsys.readouterr().out)


class TestMetrics:
    def test_graph_and_ordering(self, tmp_path):
        chain(3).to_csv(tmp_path / "truth.csv")
        Dag.empty(3).to_csv(tmp_path / "graph.csv")
        (tmp_path / "ordering.json").write_text(json.dumps(["X2", "X1", "X0"]))
        assert main(["metrics", "--truth", str(tmp_path / "truth.csv"), "--graph", str(tmp_path / "graph.csv"),
                     "--ordering", str(tmp_path / "ordering.json"), "--out", str(tmp_path / "m.json")]) == 0
        report = json.loads((tmp_path / "m.json").read_text())
        assert report['shd'] == 2
        assert report['d_top'] == 2

    def test_ordering_only(self, tmp_path):
        chain(3).to_csv(tmp_path / "truth.csv")
        (tmp_path / "ordering.json").write_text(json.dumps(["X0", "X1", "X2"]))
        assert main(["metrics", "--truth", str(tmp_path / "truth.csv"),
                     "--ordering", str(tmp_path / "ordering.json"), "--out", str(tmp_path / "m.json")]) == 0
        assert json.loads((tmp_path / "m.json").read_text()) == {'d_top': 0}

    def test_needs_graph_or_ordering(self, tmp_path):
        chain(3).to_csv(tmp_path / "truth.csv")
        assert main(["metrics", "--truth", str(tmp_path / "truth.csv")]) == 2

    def test_unknown_label(self, tmp_path):
        chain(2).to_csv(tmp_path / "truth.csv")
        (tmp_path / "ordering.json").write_text(json.dumps(["X0", "Y"]))
        assert main(["metrics", "--truth", str(tmp_path / "truth.csv"),
                     "--ordering", str(tmp_path / "ordering.json")]) == 2


class TestDemo2var:
    def test_deterministic_columns(self, tmp_path, tiny_config):
        for name in ("a", "b"):
            assert main(["demo2var", "--config", str(tiny_config), "--n", "50", "--t", "2",
                         "-o", str(tmp_path / name)]) == 0
        a = pd.read_csv(tmp_path / "a" / "hessians.csv")
        b = pd.read_csv(tmp_path / "b" / "hessians.csv")
        assert list(a.columns) == ["cause", "effect"]
        assert len(a) == 50
        assert np.array_equal(a.to_numpy(), b.to_numpy())

    @pytest.mark.slow
    def test_effect_is_flatter(self, tmp_path):
        assert main(["demo2var", "--seed", "0", "-o", str(tmp_path)]) == 0
        frame = pd.read_csv(tmp_path / "hessians.csv")
        assert frame['effect'].var() < frame['cause'].var()


class TestBench:
    def test_rows_and_header(self, tmp_path, tiny_config):
        assert main(["bench", "--config", str(tiny_config), "-o", str(tmp_path)]) == 0
        frame = pd.read_csv(tmp_path / "bench.csv")
        assert list(frame.columns) == BENCH_COLUMNS
        assert list(frame.columns[:7]) == ['variant', 'd', 'n', 'k', 'seed', 'd_top', 'seconds']
        assert len(frame) == 2
        assert set(frame['variant']) == {'masking', 'residue'}
        assert frame['d_top'].between(0, 3).all()
