"""End-to-end command-line runs on small problems."""

import os

import numpy as np
import pytest

from bcclust.cli import main
from bcclust.imageseg import GrayImage, load_grayscale, write_image
from bcclust import io as bio


def run(argv):
    return main(argv)


class TestSimulateCommand:
    def test_small_run_writes_all_outputs(self, tmp_path):
        out = tmp_path / "out"
        code = run(["simulate", "--n", "200", "--eps1", "0.5",
                    "--mode", "stochastic", "--t-final", "5",
                    "--seed", "3", "--out-dir", str(out)])
        assert code == 0
        for name in ("trajectory.csv", "moments.csv", "clusters.csv",
                     "steady_state.csv", "density.csv", "manifest.txt"):
            assert (out / name).exists(), name

    def test_missing_eps1_is_usage_error(self, tmp_path, capsys):
        code = run(["simulate", "--mode", "stochastic",
                    "--out-dir", str(tmp_path)])
        assert code == 2
        assert "eps1" in capsys.readouterr().err

    def test_missing_mode_is_usage_error(self, tmp_path):
        assert run(["simulate", "--eps1", "0.5",
                    "--out-dir", str(tmp_path)]) == 2

    def test_config_file_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n = 100\neps1 = 0.5\nmode = stochastic\n"
                       "t-final = 2\nseed = 1\n")
        out = tmp_path / "o1"
        assert run(["simulate", "--config", str(cfg),
                    "--out-dir", str(out)]) == 0
        manifest = bio.read_manifest(out / "manifest.txt")
        assert manifest["n"] == "100"
        # a flag overrides the same key in the config file
        out2 = tmp_path / "o2"
        assert run(["simulate", "--config", str(cfg), "--n", "64",
                    "--out-dir", str(out2)]) == 0
        assert bio.read_manifest(out2 / "manifest.txt")["n"] == "64"

    def test_malformed_config_rejected(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("just words\n")
        assert run(["simulate", "--config", str(cfg),
                    "--out-dir", str(tmp_path)]) == 2

    def test_bad_threads_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BC_THREADS", "many")
        assert run(["simulate", "--n", "50", "--eps1", "0.5",
                    "--mode", "stochastic", "--t-final", "1",
                    "--out-dir", str(tmp_path / "o")]) == 2

    def test_init_file_round_trip(self, tmp_path):
        ps_path = tmp_path / "init.csv"
        rng = np.random.default_rng(0)
        from bcclust.model import ParticleSet
        bio.write_particles_csv(ps_path, ParticleSet(rng.uniform(0, 1, (40, 1))))
        out = tmp_path / "o"
        assert run(["simulate", "--init", "file", "--init-file", str(ps_path),
                    "--eps1", "0.5", "--mode", "stochastic",
                    "--t-final", "2", "--out-dir", str(out)]) == 0


class TestDeterminism:
    def test_rerun_bit_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["simulate", "--n", "300", "--eps1", "0.15", "--method", "mfi",
                "--M", "5", "--mode", "stochastic", "--t-final", "5",
                "--seed", "11"]
        assert run(argv + ["--out-dir", str(a)]) == 0
        assert run(argv + ["--out-dir", str(b)]) == 0
        for name in ("trajectory.csv", "moments.csv", "clusters.csv",
                     "steady_state.csv", "density.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


class TestShapeCommand:
    def test_sweep_outputs(self, tmp_path):
        out = tmp_path / "out"
        code = run(["shape", "--n", "150", "--alpha-list", "0.05",
                    "--eps1-list", "0.1 0.2", "--runs", "1",
                    "--t-final", "3", "--out-dir", str(out)])
        assert code == 0
        assert (out / "sweep.csv").exists()
        assert (out / "summary.csv").exists()
        centers = [f for f in os.listdir(out) if f.startswith("centers_")]
        assert len(centers) == 2

    def test_pattern_file(self, tmp_path):
        pat = tmp_path / "seg.txt"
        pat.write_text("0.2 0.2 0.8 0.8\n")
        out = tmp_path / "out"
        assert run(["shape", "--pattern", "file", "--pattern-file", str(pat),
                    "--n", "80", "--alpha-list", "0.05",
                    "--eps1-list", "0.2", "--t-final", "2",
                    "--out-dir", str(out)]) == 0

    def test_missing_lists_usage_error(self, tmp_path):
        assert run(["shape", "--out-dir", str(tmp_path)]) == 2


class TestSegmentCommand:
    def make_quadrant(self, tmp_path, side=8):
        half = side // 2
        g = np.zeros((side, side))
        g[:half, :half] = 1.0
        g[half:, :half] = 0.75
        g[half:, half:] = 0.25
        img = GrayImage(side, side, g.ravel())
        path = tmp_path / "quad.pgm"
        write_image(img, path, "P5")
        return path

    def test_segment_quadrant(self, tmp_path):
        path = self.make_quadrant(tmp_path)
        out = tmp_path / "out"
        code = run(["segment", "--input", str(path), "--eps1", "0.5",
                    "--eps2", "0.3", "--threshold", "0.5",
                    "--out-dir", str(out)])
        assert code == 0
        seg = load_grayscale(out / "segmented.pgm")
        assert set(np.round(seg.intensities * 255).astype(int)) == {32, 223}
        binary = load_grayscale(out / "binary.pgm")
        assert set(binary.intensities) <= {0.0, 1.0}
        assert (out / "labels.csv").exists()
        assert (out / "clusters.csv").exists()

    def test_missing_input_runtime_error(self, tmp_path):
        assert run(["segment", "--input", str(tmp_path / "nope.pgm"),
                    "--eps1", "0.5", "--eps2", "0.3",
                    "--out-dir", str(tmp_path)]) == 1

    def test_corrupt_input_runtime_error(self, tmp_path):
        bad = tmp_path / "bad.pgm"
        bad.write_bytes(b"P5\n4 4\n255\n\x00")
        assert run(["segment", "--input", str(bad), "--eps1", "0.5",
                    "--eps2", "0.3", "--out-dir", str(tmp_path)]) == 1


class TestBenchCommand:
    def test_bench_writes_grid(self, tmp_path):
        out = tmp_path / "out"
        code = run(["bench", "--n-list", "256 512", "--M-list", "4 8",
                    "--steps", "3", "--out-dir", str(out)])
        assert code == 0
        lines = (out / "bench.csv").read_text().splitlines()
        assert lines[0] == "n,M,seconds_per_step"
        assert len(lines) == 5

    def test_missing_lists(self, tmp_path):
        assert run(["bench", "--out-dir", str(tmp_path)]) == 2
