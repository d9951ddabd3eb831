"""
Tests for dataset generators, the benchmark sweep and reporting
"""

import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from src.christoffel.scores import empirical_christoffel
from src.errors import ConfigError, MissingFileError
from src.harness.benchmark import load_experiment_config, run_benchmark, save_experiment_config
from src.harness.datasets import (
    build_dataset,
    draw_truth,
    gen_bump_manifold,
    gen_fixed_bumps,
    gen_gmm_prior,
    gen_union_subspaces,
    stream_seed,
)
from src.harness.reporting import SUMMARY_FIELDS, read_summary_csv, summarize
from src.models.experiment import DatasetName, DatasetSpec, ExperimentConfig, OutputSpec, ResultRow
from src.models.sampler import SamplerConfig
from src.placement.greedy import mean_adjust
from src.sensing.snapshot_io import SCHEMA_LINE


class TestGenerators(unittest.TestCase):
    """Synthetic datasets"""

    def test_bump_manifold_deterministic(self):
        """Same seed, same snapshots"""
        first = gen_bump_manifold(32, 10, rng_seed=5)
        np.testing.assert_array_equal(first.data, gen_bump_manifold(32, 10, rng_seed=5).data)
        self.assertEqual(first.data.shape, (32, 10))

    def test_bump_manifold_in_two_dimensions(self):
        """2-D bumps live on a square grid"""
        snapshots = gen_bump_manifold(16, 5, rng_seed=0, dim=2)
        self.assertEqual(snapshots.grid.dim, 2)

    def test_union_subspace_rank(self):
        """Mean-adjusted union-of-subspaces data has rank at most k * d"""
        snapshots = gen_union_subspaces(20, 60, n_subspaces=2, dim_per=2, rng_seed=3)
        X, _ = mean_adjust(snapshots)
        self.assertLessEqual(np.linalg.matrix_rank(X), 4)

    def test_single_subspace_score_bound(self):
        """On one k-dimensional subspace the scores sum to at most k"""
        snapshots = gen_union_subspaces(24, 80, n_subspaces=1, dim_per=3, rng_seed=4)
        self.assertLessEqual(empirical_christoffel(snapshots).scores.sum(), 3 + 1e-9)

    def test_fixed_bumps_rank(self):
        """Fixed-center bumps have rank equal to the number of centers"""
        snapshots = gen_fixed_bumps(32, 40, centers=(0.2, 0.5, 0.8), rng_seed=2)
        self.assertEqual(np.linalg.matrix_rank(snapshots.data), 3)

    def test_gmm_prior_and_samples(self):
        """The mixture generator returns K components and M samples"""
        prior, snapshots = gen_gmm_prior(16, 1, separation=2.0, rng_seed=0, n_snapshots=25)
        self.assertEqual(prior.n_components, 1)
        self.assertEqual(snapshots.data.shape, (16, 25))

    def test_truth_stream_is_separate(self):
        """Truth and snapshot streams have distinct seeds"""
        dataset = build_dataset(DatasetSpec(n_nodes=16, n_snapshots=10, seed=0))
        truth_seed = stream_seed(0, "truth", 0)
        self.assertNotEqual(truth_seed, dataset.snapshot_seed)
        x_star = draw_truth(dataset, truth_seed)
        self.assertEqual(x_star.shape, (16,))
        self.assertFalse(any(np.array_equal(x_star, column) for column in dataset.snapshots.data.T))

    def test_gmm_dataset_prior_is_generator_prior(self):
        """The gmm dataset uses the generating mixture as its prior"""
        dataset = build_dataset(DatasetSpec(name=DatasetName.GMM, n_nodes=16, n_snapshots=10, n_components=3))
        self.assertEqual(dataset.prior.n_components, 3)


class TestBenchmark(unittest.TestCase):
    """Sweeps, summaries and config files"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.config = ExperimentConfig(
            dataset=DatasetSpec(n_nodes=16, n_snapshots=12, seed=1),
            strategies=["random", "christoffel_greedy"],
            m_values=[2, 3],
            n_seeds=2,
            sampler=SamplerConfig(n_steps=8),
            n_jobs=1,
            output=OutputSpec(
                rows_csv=os.path.join(self.tmp.name, "rows.csv"),
                summary_csv=os.path.join(self.tmp.name, "summary.csv"),
            ),
        )

    def tearDown(self):
        self.tmp.cleanup()

    def test_rows_and_summary(self):
        """2 strategies x 2 m x 2 seeds gives 8 sorted rows and a matching summary"""
        rows, summary = run_benchmark(self.config)
        self.assertEqual(len(rows), 8)
        self.assertEqual([row.sort_key() for row in rows], sorted(row.sort_key() for row in rows))
        self.assertTrue(all(row.status == "ok" for row in rows))
        self.assertEqual(len(summary), 4)
        for entry in summary:
            values = [r.rel_l2 for r in rows if (r.strategy, r.m) == (entry["strategy"], entry["m"])]
            self.assertAlmostEqual(entry["mean_rel_l2"], sum(values) / len(values), places=12)
        with open(self.config.output.summary_csv) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], SCHEMA_LINE)
        self.assertEqual(lines[1], ",".join(SUMMARY_FIELDS))
        self.assertEqual(len(read_summary_csv(self.config.output.summary_csv)), 4)

    def test_rerun_is_byte_identical(self):
        """Two runs of one config write the same summary bytes"""
        run_benchmark(self.config)
        with open(self.config.output.summary_csv, "rb") as f:
            first = f.read()
        run_benchmark(self.config)
        with open(self.config.output.summary_csv, "rb") as f:
            self.assertEqual(f.read(), first)

    def test_rows_record_streams(self):
        """Each row records disjoint truth and snapshot stream seeds"""
        rows, _ = run_benchmark(self.config)
        for row in rows:
            streams = row.extra["streams"]
            self.assertNotEqual(streams["truth"], streams["snapshots"])
            self.assertEqual(len(row.extra["selection"]), row.m)

    def test_failed_cells_do_not_abort(self):
        """A failing reconstruction becomes a failed row with a reason"""
        with mock.patch("src.harness.benchmark.dps_reconstruct", side_effect=RuntimeError("boom")):
            rows, summary = run_benchmark(self.config)
        self.assertEqual(len(rows), 8)
        self.assertTrue(all(row.status == "failed" for row in rows))
        self.assertIn("boom", rows[0].extra["reason"])
        self.assertEqual(summary, [])

    def test_online_cell(self):
        """Online strategies run through the ensemble loop"""
        config = ExperimentConfig.model_validate({
            **self.config.model_dump(),
            "strategies": ["online_christoffel"],
            "m_values": [3],
            "n_seeds": 1,
            "online": {"n_ensemble": 3, "n_drift_events": 2, "n_anchor": 1},
        })
        rows, _ = run_benchmark(config)
        self.assertEqual(rows[0].status, "ok")
        self.assertEqual(rows[0].extra["n_events"], 2)

    def test_summary_std_is_sample_std(self):
        """Summary std uses the n - 1 divisor"""
        rows = [
            ResultRow(dataset="d", strategy="random", m=2, seed=s, rel_l2=value)
            for s, value in enumerate([0.1, 0.2, 0.6])
        ]
        entry = summarize(rows)[0]
        self.assertAlmostEqual(entry["std_rel_l2"], float(np.std([0.1, 0.2, 0.6], ddof=1)))
        self.assertEqual(entry["n_seeds"], 3)


class TestExperimentConfigFile(unittest.TestCase):
    """JSON experiment configs"""

    def test_round_trip(self):
        """A saved config loads back equal"""
        config = ExperimentConfig(m_values=[2, 4], n_seeds=3, n_jobs=1)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "config.json")
            save_experiment_config(config, path)
            self.assertEqual(load_experiment_config(path), config)

    def test_missing_and_malformed(self):
        """Missing files and invalid content raise typed errors"""
        with self.assertRaises(MissingFileError):
            load_experiment_config("/nonexistent/config.json")
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "config.json")
            with open(path, "w") as f:
                f.write('{"m_values": [0]}')
            with self.assertRaises(ConfigError):
                load_experiment_config(path)
            with open(path, "w") as f:
                f.write("not json")
            with self.assertRaises(ConfigError):
                load_experiment_config(path)

    def test_shipped_example_config_is_valid(self):
        """configs/bench_example.json validates"""
        path = os.path.join(os.path.dirname(__file__), "..", "configs", "bench_example.json")
        config = load_experiment_config(path)
        self.assertGreaterEqual(len(config.strategies), 2)


if __name__ == "__main__":
    unittest.main()
