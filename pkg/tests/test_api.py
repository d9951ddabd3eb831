"""
Tests for the placement and reconstruction HTTP service
"""

import unittest

import numpy as np
from fastapi.testclient import TestClient

from src.harness.datasets import gen_bump_manifold
from src.main import app


class TestServiceInfo(unittest.TestCase):
    """Health and root endpoints"""

    def setUp(self):
        self.client = TestClient(app)

    def test_health(self):
        """/health reports healthy"""
        response = self.client.get("/health")
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.json()["status"], "healthy")

    def test_root(self):
        """/ lists the service features"""
        self.assertIn("DPS Reconstruction", self.client.get("/").json()["features"])


class TestPlacementAPI(unittest.TestCase):
    """/api/placement"""

    def setUp(self):
        self.client = TestClient(app)
        self.snapshots = {"data": gen_bump_manifold(16, 12, rng_seed=1).data.tolist()}

    def test_score(self):
        """Scores and the sampling measure come back per node"""
        response = self.client.post("/api/placement/score", json={"snapshots": self.snapshots})
        self.assertEqual(response.status_code, 200)
        body = response.json()
        self.assertEqual(len(body["scores"]), 16)
        self.assertAlmostEqual(sum(body["sampling_measure"]), 1.0)
        self.assertEqual(body["n_pairs_used"] + body["n_zero_skipped"], 12 * 11 // 2)

    def test_place(self):
        """Greedy placement returns m distinct nodes"""
        response = self.client.post(
            "/api/placement/place",
            json={"snapshots": self.snapshots, "strategy": "christoffel_greedy", "m": 4},
        )
        self.assertEqual(response.status_code, 200)
        self.assertEqual(len(set(response.json()["indices"])), 4)

    def test_degenerate_snapshots(self):
        """Identical snapshots are a 400 with the error payload"""
        response = self.client.post(
            "/api/placement/score", json={"snapshots": {"data": [[1.0, 1.0]] * 8}}
        )
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.json()["detail"]["exit_code"], 7)

    def test_bad_shapes(self):
        """Coordinates that do not match the rows are rejected"""
        response = self.client.post(
            "/api/placement/score",
            json={"snapshots": {"data": [[0.0, 1.0]] * 4, "coords": [[0.0], [1.0]]}},
        )
        self.assertEqual(response.status_code, 400)

    def test_unknown_strategy(self):
        """Unknown strategy names fail request validation"""
        response = self.client.post(
            "/api/placement/place", json={"snapshots": self.snapshots, "strategy": "magic", "m": 2}
        )
        self.assertEqual(response.status_code, 422)


class TestReconstructionAPI(unittest.TestCase):
    """/api/reconstruction"""

    def setUp(self):
        self.client = TestClient(app)
        self.prior = {"weights": [1.0], "means": [[0.0] * 6], "variances": [[1.0] * 6]}

    def test_dps(self):
        """A guided reconstruction returns one value per node"""
        response = self.client.post(
            "/api/reconstruction/dps",
            json={"prior": self.prior, "indices": [1, 4], "y": [0.5, -0.5], "seed": 3, "sampler": {"n_steps": 10}},
        )
        self.assertEqual(response.status_code, 200)
        body = response.json()
        self.assertEqual(len(body["estimate"]), 6)
        self.assertGreaterEqual(body["residual_norm"], 0.0)

    def test_dps_bad_prior(self):
        """Weights that do not sum to one are a 400"""
        prior = {**self.prior, "weights": [0.5]}
        response = self.client.post("/api/reconstruction/dps", json={"prior": prior, "indices": [0], "y": [0.0]})
        self.assertEqual(response.status_code, 400)

    def test_dps_measurement_count(self):
        """y must have one entry per sensor"""
        response = self.client.post(
            "/api/reconstruction/dps", json={"prior": self.prior, "indices": [0, 1], "y": [0.0]}
        )
        self.assertEqual(response.status_code, 400)

    def test_oracle(self):
        """The oracle updates observed nodes and leaves the rest"""
        response = self.client.post(
            "/api/reconstruction/oracle",
            json={"mean": [1.0, 0.0], "variance": [0.5, 0.5], "indices": [0], "y": [2.0], "sigma_eta": 0.5},
        )
        self.assertEqual(response.status_code, 200)
        body = response.json()
        np.testing.assert_allclose(body["mean"], [1.0 + 0.5 / 0.75, 0.0])
        np.testing.assert_allclose(body["variance"], [0.5 - 0.25 / 0.75, 0.5])

    def test_oracle_index_out_of_range(self):
        """Sensor indices past the field length are a 400"""
        response = self.client.post(
            "/api/reconstruction/oracle",
            json={"mean": [0.0], "variance": [1.0], "indices": [3], "y": [1.0]},
        )
        self.assertEqual(response.status_code, 400)


if __name__ == "__main__":
    unittest.main()
