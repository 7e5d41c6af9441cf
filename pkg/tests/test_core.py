"""
Tests for the experiment runner: datasets, training artifacts and evaluation.
"""

import io
import logging
import math

import numpy as np
import pytest
import yaml

from betagan import BetaGanLab, setup_logging
from betagan.config import parse_config, read_manifest_metadata
from betagan.core import SUMMARY_HEADER, TRACE_HEADER, evaluate_samples
from betagan.models import ConfigError, DataFormatError, TrainingMode
from betagan.synthetic import MOG5_CENTERS, make_layout, read_sidecar, sample_layout
from betagan.utils import ProgressReporter
from betagan.utils.csv_io import read_matrix, read_table


def tiny_experiment(out, **overrides) -> dict:
    data = {
        "dataset": {"layout": "line4", "n_points": 50, "seed": 2},
        "networks": {"generator": "relu 8", "discriminator": "tanh 8"},
        "schedule": {"beta1": 0.5, "betaK": 4.0, "K": 2},
        "trainer": {"m": 8, "n": 3, "n_pretrain": 4, "pretrain_check_every": 2, "pretrain_eval_samples": 100},
        "stage_samples": 50,
        "seed": 1,
        "out": str(out),
    }
    data.update(overrides)
    return data


class TestSynth:
    """Test dataset generation."""

    def setup_method(self):
        self.lab = BetaGanLab()

    def test_shape_and_sidecar(self, tmp_path):
        path = self.lab.synth("mog5", 100, 0, tmp_path / "mog5.csv")
        assert read_matrix(path).shape == (100, 3)
        description = read_sidecar(tmp_path / "mog5.yaml")
        assert description.layout == "mog5"
        assert description.transform is None

    def test_byte_identical_for_equal_seeds(self, tmp_path):
        a = self.lab.synth("cubes", 500, 4, tmp_path / "a.csv")
        b = self.lab.synth("cubes", 500, 4, tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_rescaled_output_keeps_layout_scale(self, tmp_path):
        raw = self.lab.synth("ring8", 400, 1, tmp_path / "raw.csv")
        scaled = self.lab.synth("ring8", 400, 1, tmp_path / "ring.csv", rescale=True)
        np.testing.assert_array_equal(read_matrix(scaled), read_matrix(raw))
        transform = read_sidecar(tmp_path / "ring.yaml").transform
        assert (transform.scale, transform.offset) == ((1.0, 1.0), (0.0, 0.0))

    def test_balanced_edges(self, tmp_path):
        path = self.lab.synth("cubes", 48, 0, tmp_path / "cubes.csv", balanced_edges=True)
        assert read_matrix(path).shape == (48, 3)


class TestLoadData:
    """Test dataset sources."""

    def setup_method(self):
        self.lab = BetaGanLab()

    def test_layout_source_is_placed_in_box(self, tmp_path):
        dataset, description = self.lab.load_data(parse_config(tiny_experiment(tmp_path)))
        assert dataset.points.shape == (50, 1)
        assert dataset.box.contains(dataset.points)
        assert description.transform.scale == (1.0,)
        raw = sample_layout(make_layout("line4"), 50, np.random.default_rng(2))
        inside = np.all(np.abs(raw) <= 1.0, axis=1)
        np.testing.assert_array_equal(dataset.points[inside], raw[inside])

    def test_layout_scale_independent_of_sample_count(self, tmp_path):
        datasets = []
        for n_points in (200, 2000):
            source = {"layout": "mog5", "n_points": n_points, "seed": 0}
            config = parse_config(tiny_experiment(tmp_path, dataset=source, box={"low": -2.0, "high": 2.0}))
            datasets.append(self.lab.load_data(config))
        (_, small_description), (large, large_description) = datasets
        assert small_description.transform == large_description.transform
        assert small_description.transform.scale == (2.0, 2.0, 2.0)
        assert large.box.contains(large.points)

    def test_raw_layout_file_uses_layout_transform(self, tmp_path):
        path = self.lab.synth("mog5", 200, 0, tmp_path / "raw.csv")
        config = parse_config(tiny_experiment(tmp_path, dataset={"path": str(path)}))
        dataset, description = self.lab.load_data(config)
        raw = read_matrix(path)
        inside = np.all(np.abs(raw) <= 1.0, axis=1)
        assert dataset.box.contains(dataset.points)
        assert description.transform.scale == (1.0, 1.0, 1.0)
        np.testing.assert_array_equal(dataset.points[inside], raw[inside])

    def test_plain_file_is_rescaled(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("0,5\n10,7\n")
        config = parse_config(tiny_experiment(tmp_path, dataset={"path": str(path)}))
        dataset, description = self.lab.load_data(config)
        assert description is None
        np.testing.assert_array_equal(dataset.points, [[-1.0, -1.0], [1.0, 1.0]])

    def test_rescaled_file_not_rescaled_again(self, tmp_path):
        path = self.lab.synth("mog5", 200, 0, tmp_path / "scaled.csv", rescale=True)
        config = parse_config(tiny_experiment(tmp_path, dataset={"path": str(path)}))
        dataset, _ = self.lab.load_data(config)
        np.testing.assert_array_equal(dataset.points, read_matrix(path))

    def test_points_outside_box_without_rescale(self, tmp_path):
        path = tmp_path / "far.csv"
        path.write_text("0.5,3.0\n-0.2,0.1\n")
        config = parse_config(tiny_experiment(tmp_path, dataset={"path": str(path), "rescale": False}))
        with pytest.raises(ConfigError):
            self.lab.load_data(config)


class TestTrain:
    """Test a full run on a tiny configuration."""

    def setup_method(self):
        self.lab = BetaGanLab()

    def test_artifacts(self, tmp_path):
        out = tmp_path / "run"
        result = self.lab.train(parse_config(tiny_experiment(out)))

        assert len(result.stage_files) == 4
        assert result.stage_files[0].name == "stage_00_uniform.csv"
        assert result.stage_files[-1].name == "stage_03_inf.csv"
        assert result.trace.stage_boundaries[0][0] == "uniform"
        for stage_file in result.stage_files:
            assert read_matrix(stage_file).shape == (50, 1)
            stem = stage_file.stem
            assert (out / "checkpoints" / f"{stem}.G.ckpt").exists()
            assert (out / "checkpoints" / f"{stem}.D.ckpt").exists()
        np.testing.assert_array_equal(read_matrix(out / "samples" / "final.csv"), read_matrix(result.stage_files[-1]))
        assert (out / "data.csv").exists()
        assert (out / "data.yaml").exists()

        rows = read_table(out / "trace.csv")
        assert tuple(rows[0]) == TRACE_HEADER
        assert len(rows) == len(result.trace)
        assert float(rows[0]["beta"]) == 0.0
        assert math.isinf(float(rows[-1]["beta"]))
        assert int(rows[-1]["tau"]) == result.tau

        stages = read_table(out / "stages.csv")
        assert [row["stage"] for row in stages][-1] == "inf"

        metadata = read_manifest_metadata(out / "manifest.yaml")
        assert metadata["status"] == "complete"
        assert metadata["tau"] == result.tau
        assert metadata["generator_loss"] == "saturating"

    def test_tau_identity(self, tmp_path):
        config = parse_config(tiny_experiment(tmp_path / "run"))
        result = self.lab.train(config)
        iterations = result.pretrain.steps + 2 * config.trainer.n + config.trainer.n
        assert result.tau == 2 * iterations

    def test_rerun_is_identical(self, tmp_path):
        self.lab.train(parse_config(tiny_experiment(tmp_path / "a")))
        self.lab.train(parse_config(tiny_experiment(tmp_path / "b")))
        assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()
        assert (tmp_path / "a" / "samples" / "final.csv").read_bytes() == (
            tmp_path / "b" / "samples" / "final.csv"
        ).read_bytes()

    def test_manifest_reproduces_run(self, tmp_path):
        first = self.lab.train(parse_config(tiny_experiment(tmp_path / "a")))
        manifest = yaml.safe_load((tmp_path / "a" / "manifest.yaml").read_text())
        manifest["out"] = str(tmp_path / "b")
        second = self.lab.train(parse_config(manifest))
        assert first.trace.records == second.trace.records

    def test_vanilla_mode(self, tmp_path):
        config = parse_config(tiny_experiment(tmp_path / "vanilla", mode="vanilla", tau_budget=10))
        result = self.lab.train(config)
        assert result.mode is TrainingMode.VANILLA
        assert result.tau == 10
        assert len(result.stage_files) == 1
        assert result.pretrain is None
        assert read_manifest_metadata(tmp_path / "vanilla" / "manifest.yaml")["generator_loss"] == "non_saturating"

    def test_summary_row(self, tmp_path):
        result = self.lab.train(parse_config(tiny_experiment(tmp_path / "run")))
        row = self.lab.summarize(result, seed=1)
        assert tuple(row) == SUMMARY_HEADER
        assert row["total_modes"] == 4
        assert 0.0 <= row["final_gap"] <= 1.0

    def test_paired_sweep(self, tmp_path):
        config = parse_config(tiny_experiment(tmp_path / "sweep"))
        rows = self.lab.sweep(config, [0, 1], paired=True, workers=1)
        assert [(row["seed"], row["mode"]) for row in rows] == [
            (0, "beta_gan"), (0, "vanilla"), (1, "beta_gan"), (1, "vanilla")
        ]
        for annealed, vanilla in (rows[0:2], rows[2:4]):
            assert vanilla["tau"] == annealed["tau"]
        summary = read_table(tmp_path / "sweep" / "sweep_summary.csv")
        assert tuple(summary[0]) == SUMMARY_HEADER
        assert len(summary) == 4
        assert (tmp_path / "sweep" / "vanilla" / "seed_1" / "trace.csv").exists()


class TestEvaluate:
    """Test scoring of sample files."""

    def setup_method(self):
        self.lab = BetaGanLab()

    def test_ground_truth_full_coverage(self, tmp_path):
        data = self.lab.synth("mog5", 5000, 0, tmp_path / "mog5.csv")
        report = self.lab.evaluate(data, tmp_path / "mog5.yaml", tmp_path / "report.yaml")
        assert report.coverage.covered_count == 5
        assert (tmp_path / "report.yaml").exists()
        assert len(read_table(tmp_path / "mode_fractions.csv")) == 5

    def test_ground_truth_in_box_coordinates(self, tmp_path):
        data = self.lab.synth("mog5", 5000, 0, tmp_path / "mog5.csv", rescale=True)
        report = self.lab.evaluate(data, tmp_path / "mog5.yaml", tmp_path / "report.yaml")
        assert report.coverage.covered_count == 5

    def test_collapsed_file(self, tmp_path):
        self.lab.synth("mog5", 10, 0, tmp_path / "mog5.csv")
        samples = tmp_path / "collapsed.csv"
        samples.write_text((",".join(repr(c) for c in MOG5_CENTERS[2]) + "\n") * 200)
        report = self.lab.evaluate(samples, tmp_path / "mog5.yaml", tmp_path / "report.yaml")
        assert report.coverage.covered_count <= 1
        assert report.frozen_noise == 0.0

    def test_cubes_report(self, tmp_path):
        data = self.lab.synth("cubes", 2000, 3, tmp_path / "cubes.csv")
        report = self.lab.evaluate(data, tmp_path / "cubes.yaml", tmp_path / "report.yaml")
        assert report.coverage.total_modes == 2
        assert report.wireframe_fraction > 0.99
        assert report.cube_shares[0] == pytest.approx(0.5, abs=0.05)

    def test_malformed_samples(self, tmp_path):
        self.lab.synth("mog5", 10, 0, tmp_path / "mog5.csv")
        samples = tmp_path / "bad.csv"
        samples.write_text("0.1,0.2,0.3\n0.1,0.2\n")
        with pytest.raises(DataFormatError) as excinfo:
            self.lab.evaluate(samples, tmp_path / "mog5.yaml", tmp_path / "report.yaml")
        assert excinfo.value.line == 2

    def test_column_count_checked(self, tmp_path):
        self.lab.synth("mog5", 10, 0, tmp_path / "mog5.csv")
        with pytest.raises(DataFormatError):
            evaluate_samples(np.zeros((5, 2)), read_sidecar(tmp_path / "mog5.yaml"))


class TestLogging:
    """Test log level selection."""

    def teardown_method(self):
        logging.getLogger("betagan").setLevel(logging.INFO)

    def test_environment_level(self, monkeypatch):
        monkeypatch.setenv("BETAGAN_LOG", "debug")
        assert setup_logging().level == logging.DEBUG

    def test_argument_wins(self, monkeypatch):
        monkeypatch.setenv("BETAGAN_LOG", "debug")
        assert setup_logging("error").level == logging.ERROR

    def test_unknown_level_falls_back(self, monkeypatch):
        monkeypatch.setenv("BETAGAN_LOG", "chatty")
        assert setup_logging().level == logging.INFO

    def test_single_handler(self):
        setup_logging()
        setup_logging()
        assert len(logging.getLogger("betagan").handlers) == 1


class TestProgressReporter:
    """Test the stage progress bar."""

    def test_reports_completion(self):
        stream = io.StringIO()
        with ProgressReporter(5, "beta=inf", stream=stream, min_interval=0.0) as progress:
            for _ in range(5):
                progress.update(1)
        text = stream.getvalue()
        assert "5/5" in text
        assert "beta=inf completed: 5 iterations" in text

    def test_failure_is_reported(self):
        stream = io.StringIO()
        with pytest.raises(RuntimeError):
            with ProgressReporter(3, "stage", stream=stream):
                raise RuntimeError("boom")
        assert "stage stopped: 0 iterations" in stream.getvalue()
