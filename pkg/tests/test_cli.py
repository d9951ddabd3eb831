"""
Tests for the christoffel-osp command line
"""

import contextlib
import io
import json
import os
import tempfile
import unittest

import numpy as np

from src.cli import main
from src.harness.reporting import read_summary_csv
from src.models.sensing import SnapshotSet
from src.sensing.measurement import grid_1d
from src.sensing.snapshot_io import load_scores_csv, load_selection_csv, load_snapshots, save_snapshots_csv


def run_cli(*argv):
    """Run main() and capture (exit code, stdout JSON or None, stderr JSON or None)."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(["--log-level", "warning", *argv])
    stdout = json.loads(out.getvalue()) if out.getvalue().strip() else None
    stderr_lines = [line for line in err.getvalue().splitlines() if line.startswith("{")]
    stderr = json.loads(stderr_lines[-1]) if stderr_lines else None
    return code, stdout, stderr


class TestGenScorePlace(unittest.TestCase):
    """gen -> score -> place"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.snapshots = os.path.join(self.tmp.name, "bumps.csnap")
        code, payload, _ = run_cli(
            "gen", "--dataset", "bump_manifold", "--n-nodes", "24", "--n-snapshots", "30",
            "--seed", "2", "--out", self.snapshots, "--csv", os.path.join(self.tmp.name, "bumps.csv"),
        )
        self.assertEqual(code, 0)
        self.assertEqual(payload["n_nodes"], 24)

    def tearDown(self):
        self.tmp.cleanup()

    def _path(self, name):
        return os.path.join(self.tmp.name, name)

    def test_gen_writes_matching_binary_and_csv(self):
        """The CSNAP1 and CSV outputs hold the same snapshots"""
        binary = load_snapshots(self.snapshots)
        text = load_snapshots(self._path("bumps.csv"))
        self.assertEqual(binary.data.shape, (24, 30))
        np.testing.assert_array_equal(binary.data, text.data)

    def test_score(self):
        """score writes one bounded score per node"""
        code, payload, _ = run_cli("score", "--snapshots", self.snapshots, "--out", self._path("scores.csv"))
        self.assertEqual(code, 0)
        self.assertTrue(payload["exact"])
        scores = load_scores_csv(self._path("scores.csv"))
        self.assertEqual(scores.shape, (24,))
        self.assertTrue(np.all((scores >= 0) & (scores <= 1)))

    def test_place_greedy(self):
        """place writes an m-row selection CSV"""
        out = self._path("selection.csv")
        code, payload, _ = run_cli(
            "place", "--snapshots", self.snapshots, "--strategy", "christoffel_greedy", "--m", "5", "--out", out,
        )
        self.assertEqual(code, 0)
        selection = load_selection_csv(out)
        self.assertEqual(selection.m, 5)
        self.assertEqual(list(selection.indices), payload["indices"])

    def test_place_reuses_score_file(self):
        """christoffel_iid accepts a precomputed score CSV"""
        run_cli("score", "--snapshots", self.snapshots, "--out", self._path("scores.csv"))
        out = self._path("selection.json")
        code, _, _ = run_cli(
            "place", "--snapshots", self.snapshots, "--strategy", "christoffel_iid", "--m", "4",
            "--score", self._path("scores.csv"), "--seed", "3", "--out", out,
        )
        self.assertEqual(code, 0)
        with open(out) as f:
            payload = json.load(f)
        self.assertEqual(payload["strategy"], "christoffel_iid")
        self.assertEqual(len(set(payload["indices"])), 4)

    def test_unknown_strategy(self):
        """An unknown strategy exits with code 5"""
        code, _, error = run_cli("place", "--snapshots", self.snapshots, "--strategy", "magic", "--m", "3")
        self.assertEqual(code, 5)
        self.assertEqual(error["error"], "UnknownStrategyError")

    def test_budget_above_grid(self):
        """m > N exits with code 6"""
        code, _, _ = run_cli(
            "place", "--snapshots", self.snapshots, "--strategy", "random", "--m", "25",
            "--out", self._path("selection.csv"),
        )
        self.assertEqual(code, 6)


class TestCLIErrors(unittest.TestCase):
    """Exit codes for bad inputs"""

    def test_missing_file(self):
        """A missing snapshot file exits with code 4"""
        code, _, error = run_cli("score", "--snapshots", "/nonexistent/x.csnap")
        self.assertEqual(code, 4)
        self.assertEqual(error["exit_code"], 4)

    def test_malformed_config(self):
        """A malformed config exits with code 3"""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "config.json")
            with open(path, "w") as f:
                f.write('{"n_seeds": 0}')
            code, _, _ = run_cli("bench", "--config", path)
        self.assertEqual(code, 3)

    def test_constant_snapshots_are_degenerate(self):
        """Constant snapshots exit with code 7"""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "flat.csv")
            save_snapshots_csv(SnapshotSet(grid=grid_1d(8), data=np.ones((8, 5))), path)
            code, _, error = run_cli("score", "--snapshots", path, "--out", os.path.join(tmp, "scores.csv"))
        self.assertEqual(code, 7)
        self.assertIn("Degenerate", error["error"])

    def test_usage_error(self):
        """Missing required arguments exit with code 2"""
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(["place", "--strategy", "random"])
        self.assertEqual(ctx.exception.code, 2)


class TestBenchAndReconstruct(unittest.TestCase):
    """bench, reconstruct and sample-prior"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.config = os.path.join(self.tmp.name, "config.json")
        with open(self.config, "w") as f:
            json.dump({
                "dataset": {"name": "bump_manifold", "n_nodes": 16, "n_snapshots": 12, "seed": 3},
                "strategies": ["random", "christoffel_greedy", "online_christoffel"],
                "m_values": [3],
                "n_seeds": 1,
                "sampler": {"n_steps": 10},
                "online": {"n_ensemble": 2, "n_drift_events": 2, "n_anchor": 1},
                "n_jobs": 1,
            }, f)

    def tearDown(self):
        self.tmp.cleanup()

    def test_bench_writes_summary(self):
        """bench writes rows and summary under --out"""
        out = os.path.join(self.tmp.name, "bench")
        code, payload, _ = run_cli("bench", "--config", self.config, "--out", out, "--traces")
        self.assertEqual(code, 0)
        self.assertEqual(payload["rows"], 3)
        self.assertEqual(payload["failed"], 0)
        with open(os.path.join(out, "summary.csv")) as f:
            self.assertEqual(f.readline().strip(), "# christoffel-osp v1")
            self.assertEqual(f.readline().strip(), "dataset,strategy,m,mean_rel_l2,std_rel_l2,n_seeds")
        strategies = {row["strategy"] for row in read_summary_csv(os.path.join(out, "summary.csv"))}
        self.assertEqual(strategies, {"random", "christoffel_greedy", "online_christoffel"})
        self.assertEqual(len(os.listdir(os.path.join(out, "traces"))), 1)

    def test_reconstruct_online_with_trace(self):
        """reconstruct stores the estimate and the online trace"""
        out = os.path.join(self.tmp.name, "cell.json")
        code, payload, _ = run_cli(
            "reconstruct", "--config", self.config, "--strategy", "online_christoffel", "--m", "3", "--out", out,
        )
        self.assertEqual(code, 0)
        with open(out) as f:
            result = json.load(f)
        self.assertEqual(len(result["estimate"]), 16)
        self.assertEqual(len(result["trace"]["events"]), 2)
        self.assertAlmostEqual(result["rel_l2"], payload["rel_l2"])

    def test_reconstruct_step_record(self):
        """--steps writes one sigma and residual row per sampler step"""
        steps = os.path.join(self.tmp.name, "steps.csv")
        code, _, _ = run_cli(
            "reconstruct", "--config", self.config, "--strategy", "christoffel_greedy", "--m", "3",
            "--out", os.path.join(self.tmp.name, "cell.json"), "--steps", steps,
        )
        self.assertEqual(code, 0)
        with open(steps) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[:2], ["# christoffel-osp v1", "step,sigma,residual_norm"])
        self.assertEqual(len(lines), 2 + 10)
        self.assertEqual(lines[-1].split(",")[:2], ["10", "0"])

    def test_step_record_needs_fixed_sensors(self):
        """--steps with an online strategy exits with code 6"""
        code, _, _ = run_cli(
            "reconstruct", "--config", self.config, "--strategy", "online_christoffel", "--m", "3",
            "--steps", os.path.join(self.tmp.name, "steps.csv"),
        )
        self.assertEqual(code, 6)

    def test_sample_prior(self):
        """sample-prior writes n samples as snapshot columns"""
        out = os.path.join(self.tmp.name, "samples.csv")
        code, _, _ = run_cli("sample-prior", "--config", self.config, "--n", "3", "--n-steps", "6", "--out", out)
        self.assertEqual(code, 0)
        self.assertEqual(load_snapshots(out).data.shape, (16, 3))


if __name__ == "__main__":
    unittest.main()
