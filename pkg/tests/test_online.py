"""
Tests for the online ensemble Christoffel-DPS loop
"""

import unittest

import numpy as np

from src.diffusion.online import (
    collapse,
    default_drift_levels,
    drift_event,
    prune_alive,
    run_online,
)
from src.diffusion.sampler import dps_reconstruct, karras_schedule
from src.errors import InvalidRequestError
from src.harness.datasets import draw_truth, build_dataset
from src.models.experiment import DatasetSpec
from src.models.online import CollapseMode, EnsembleState, OnlineConfig, ScoreMode
from src.models.sampler import ChainState, SamplerConfig
from src.models.sensing import SensorSelection
from src.sensing.measurement import grid_1d, grid_2d, measure_cached, node_noise


def _ensemble(selection, n_nodes=10, estimates=None, log_likes=None):
    estimates = np.zeros((3, n_nodes)) if estimates is None else estimates
    log_likes = [None] * estimates.shape[0] if log_likes is None else log_likes
    return EnsembleState(
        chains=[ChainState(z=np.zeros(n_nodes), log_like=value) for value in log_likes],
        alive=list(range(estimates.shape[0])),
        selection=selection,
        y=np.zeros(selection.m),
        estimates=estimates,
    )


class TestPruneAndCollapse(unittest.TestCase):
    """Likelihood-gap pruning and ensemble collapse"""

    def test_gap_rule(self):
        """Chains more than delta * m behind the best are dropped"""
        log_likes = np.array([-1.0, -5.0, -2.5, -9.0])
        self.assertEqual(prune_alive([0, 1, 2, 3], log_likes, 1.0, 2, 1), [0, 2])

    def test_floor_keeps_best(self):
        """The n_min best chains survive even when all fall behind"""
        log_likes = np.array([-1.0, -50.0, -30.0, -30.0])
        self.assertEqual(prune_alive([0, 1, 2, 3], log_likes, 0.1, 1, 3), [0, 2, 3])

    def test_pruning_disabled(self):
        """delta None keeps every chain"""
        self.assertEqual(prune_alive([2, 0, 1], np.array([0.0, -100.0, -5.0]), None, 3, 1), [0, 1, 2])

    def test_pruned_chains_stay_pruned(self):
        """The survivors are a subset of the alive set"""
        log_likes = np.array([-1.0, 0.0, -2.0, -0.5])
        self.assertEqual(prune_alive([0, 2, 3], log_likes, 1.0, 2, 1), [0, 2, 3])
        self.assertEqual(prune_alive([0, 2, 3], log_likes, 0.3, 2, 1), [0, 3])

    def test_collapse_modes(self):
        """best_likelihood picks the argmax chain, mean_survivors averages alive estimates"""
        estimates = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
        ensemble = _ensemble(SensorSelection(indices=[0]), 2, estimates, [-3.0, -1.0, -1.0])
        np.testing.assert_array_equal(collapse(ensemble), [2.0, 3.0])
        ensemble.alive = [0, 2]
        np.testing.assert_array_equal(collapse(ensemble, CollapseMode.MEAN_SURVIVORS), [2.0, 3.0])


class TestDriftEvent(unittest.TestCase):
    """Local relocation of mobile sensors"""

    def test_anchors_fixed_and_moves_local(self):
        """Anchors keep their nodes and every move stays within the radius"""
        grid = grid_1d(21)
        selection = SensorSelection(indices=[0, 20, 5, 12], n_anchor=2)
        score = np.random.default_rng(0).uniform(size=21)
        new_selection, relocations = drift_event(_ensemble(selection, 21), score, 0.2, grid, rng_seed=3)
        self.assertEqual(new_selection.anchors, (0, 20))
        self.assertEqual(new_selection.m, 4)
        for relocation in relocations:
            self.assertEqual(relocation.doublings, 0)
            self.assertLessEqual(relocation.displacement, 0.2 + 1e-12)

    def test_moves_follow_score(self):
        """With all score mass on one reachable node the sensor moves there"""
        grid = grid_1d(11)
        score = np.zeros(11)
        score[6] = 1.0
        new_selection, relocations = drift_event(
            _ensemble(SensorSelection(indices=[1, 5], n_anchor=1), 11), score, 0.15, grid, rng_seed=0
        )
        self.assertEqual(new_selection.indices, (1, 6))
        self.assertAlmostEqual(relocations[0].displacement, 0.1)

    def test_boxed_in_sensor_doubles_radius(self):
        """A sensor with no free node in reach doubles its radius and records it"""
        grid = grid_1d(11)
        selection = SensorSelection(indices=[4, 6, 5], n_anchor=2)
        new_selection, relocations = drift_event(_ensemble(selection, 11), np.ones(11), 0.1, grid, rng_seed=1)
        self.assertEqual(relocations[0].doublings, 1)
        self.assertAlmostEqual(relocations[0].radius, 0.2)
        self.assertLessEqual(relocations[0].displacement, 0.2 + 1e-12)
        self.assertEqual(len(set(new_selection.indices)), 3)

    def test_two_dimensional_grid(self):
        """Relocation works with Euclidean distances on a 2-D grid"""
        grid = grid_2d(5)
        selection = SensorSelection(indices=[12, 0], n_anchor=1)
        _, relocations = drift_event(_ensemble(selection, 25), np.ones(25), 0.3, grid, rng_seed=2)
        self.assertLessEqual(relocations[0].displacement, 0.3 + 1e-12)

    def test_non_positive_radius_rejected(self):
        """r_drift <= 0 is an InvalidRequestError"""
        selection = SensorSelection(indices=[0, 5], n_anchor=1)
        for r_drift in (0.0, -0.2):
            with self.assertRaises(InvalidRequestError):
                drift_event(_ensemble(selection), np.ones(10), r_drift, grid_1d(10), rng_seed=0)

    def test_drift_levels(self):
        """Default drift levels are strictly increasing interior schedule indices"""
        schedule = karras_schedule(30, 0.002, 80.0)
        levels = default_drift_levels(schedule, 5, 0.1)
        self.assertEqual(len(levels), 5)
        self.assertTrue(all(b > a for a, b in zip(levels, levels[1:])))
        self.assertTrue(1 <= levels[0] and levels[-1] <= 29)
        with self.assertRaises(InvalidRequestError):
            default_drift_levels(schedule, 40, 0.1)


class TestRunOnline(unittest.TestCase):
    """End-to-end online runs"""

    @classmethod
    def setUpClass(cls):
        cls.dataset = build_dataset(DatasetSpec(n_nodes=32, n_snapshots=30, seed=3))
        cls.x_star = draw_truth(cls.dataset, 99)
        cls.sampler = SamplerConfig(n_steps=20)

    def _run(self, **overrides):
        config = OnlineConfig(**{"n_ensemble": 4, "n_drift_events": 3, "n_anchor": 2, "n_mobile": 3, **overrides})
        anchors = SensorSelection(indices=[3, 20][:config.n_anchor], n_anchor=config.n_anchor)
        return run_online(self.dataset.prior, self.x_star, anchors, config, self.sampler, rng_seed=7, grid=self.dataset.grid)

    def test_trace_invariants(self):
        """Anchors fixed, local moves, nested alive sets above the floor, readings match the recorded noise"""
        estimate, trace = self._run(n_min=2)
        self.assertEqual(estimate.shape, (32,))
        self.assertEqual(len(trace.events), 3)
        noise = node_noise(32, trace.sigma_noise, trace.noise_seed)
        np.testing.assert_array_equal(
            trace.initial_y, measure_cached(SensorSelection(indices=trace.initial_selection), self.x_star, noise)
        )
        previous = set(range(4))
        for event in trace.events:
            self.assertEqual(event.selection[:2], [3, 20])
            self.assertEqual(len(event.selection), 5)
            for relocation in event.relocations:
                if relocation.doublings == 0:
                    self.assertLessEqual(relocation.displacement, trace.r_drift * (1 + 1e-12))
            self.assertTrue(set(event.alive) <= previous)
            self.assertGreaterEqual(len(event.alive), 2)
            expected_y = measure_cached(SensorSelection(indices=event.selection), self.x_star, noise)
            np.testing.assert_array_equal(event.y, expected_y)
            previous = set(event.alive)

    def test_deterministic(self):
        """Same seed, same reconstruction and trace"""
        first, trace1 = self._run()
        second, trace2 = self._run()
        np.testing.assert_array_equal(first, second)
        self.assertEqual(trace1.model_dump(), trace2.model_dump())

    def test_no_events_reduces_to_fixed_sensor_dps(self):
        """Without drift events the output is bit-identical to dps_reconstruct"""
        estimate, trace = self._run(n_drift_events=0, n_ensemble=1)
        self.assertEqual(trace.events, [])
        expected = dps_reconstruct(
            self.dataset.prior,
            SensorSelection(indices=trace.initial_selection),
            trace.initial_y,
            trace.chain_seeds[0],
            self.sampler,
        )
        np.testing.assert_array_equal(estimate, expected)

    def test_incremental_mode_adds_sensors(self):
        """Incremental mode starts with the remainder and adds n_mobile // D per event"""
        _, trace = self._run(incremental=True, n_mobile=7)
        self.assertEqual(len(trace.initial_selection), 2 + 1)
        self.assertEqual([len(event.selection) for event in trace.events], [5, 7, 9])
        for event in trace.events:
            self.assertTrue(all(r.added for r in event.relocations))

    def test_ensemble_std_scores_recorded(self):
        """ensemble_std mode records per-node standard deviations"""
        _, trace = self._run(score_mode=ScoreMode.ENSEMBLE_STD, prune_gap=None)
        for event in trace.events:
            self.assertEqual(len(event.scores), 32)
            self.assertTrue(all(value >= 0 for value in event.scores))

    def test_anchor_count_checked(self):
        """The anchor selection must match n_anchor"""
        config = OnlineConfig(n_ensemble=2, n_drift_events=1, n_anchor=2, n_mobile=1)
        with self.assertRaises(InvalidRequestError):
            run_online(self.dataset.prior, self.x_star, SensorSelection(indices=[1]), config, self.sampler)


if __name__ == "__main__":
    unittest.main()
