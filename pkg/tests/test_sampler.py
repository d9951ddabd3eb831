"""
Tests for the variance-exploding sampler, DPS guidance and the Gaussian oracle
"""

import unittest

import numpy as np

from src.diffusion.gmm import prior_scale, sample_prior
from src.diffusion.sampler import (
    MeasurementGuidance,
    chain_seed,
    dps_reconstruct,
    gaussian_posterior_oracle,
    guidance_weight,
    initial_state,
    karras_schedule,
    resolve_sigma_max,
    reverse_step,
    run_chain,
    sample_unconditional,
    schedule_for,
)
from src.errors import InvalidRequestError
from src.harness.datasets import gen_gmm_prior
from src.models.prior import GaussianMixturePrior
from src.models.sampler import GuidanceMode, SamplerConfig, SigmaSchedule
from src.models.sensing import SensorSelection
from src.sensing.measurement import relative_l2


def _flow_map(z, mean, variance, sigma_max):
    """Exact probability-flow map from sigma_max to 0 for a 1-D Gaussian prior."""
    return mean + (z - mean) * np.sqrt(variance) / np.sqrt(variance + sigma_max ** 2)


class TestSchedule(unittest.TestCase):
    """Karras noise levels"""

    def test_endpoints_and_monotonicity(self):
        """Schedule starts at sigma_max, ends at sigma_min then 0, strictly decreasing"""
        schedule = karras_schedule(10, 0.002, 80.0)
        self.assertEqual(schedule.n_steps, 10)
        self.assertEqual(schedule.sigma_max, 80.0)
        self.assertEqual(schedule.sigma_min, 0.002)
        self.assertEqual(schedule.sigmas[-1], 0.0)
        self.assertTrue(np.all(np.diff(schedule.sigmas) < 0))

    def test_invalid_schedules(self):
        """Bad schedules are rejected"""
        with self.assertRaises(InvalidRequestError):
            karras_schedule(1, 0.002, 80.0)
        with self.assertRaises(InvalidRequestError):
            karras_schedule(10, 1.0, 0.5)
        with self.assertRaises(ValueError):
            SigmaSchedule(sigmas=[1.0, 2.0, 0.0])


class TestGuidanceWeight(unittest.TestCase):
    """alpha_k"""

    def test_weight_bounds(self):
        """alpha_k is zero at sigma 0 and never exceeds sigma_eta^2"""
        self.assertEqual(guidance_weight(0.0, 0.0, 0.1), 0.0)
        for sigma_k, sigma_next in ((80.0, 50.0), (1.0, 0.5), (0.1, 0.05), (0.01, 0.0)):
            alpha = guidance_weight(sigma_k, sigma_next, 0.1)
            self.assertGreaterEqual(alpha, 0.0)
            self.assertLessEqual(alpha, 0.1 ** 2 + 1e-15)

    def test_weight_value(self):
        """w = sigma_k / sigma_eta scaled by the relative step"""
        self.assertAlmostEqual(guidance_weight(0.1, 0.09, 0.1), 0.1 * 0.01)


class TestReverseDiffusion(unittest.TestCase):
    """Unconditional and guided chains"""

    def setUp(self):
        self.prior = GaussianMixturePrior.single(np.array([1.5]), 0.5)

    def test_heun_is_second_order(self):
        """Doubling the steps cuts the Heun error by about four"""
        mean, variance, seed = 1.5, 0.5, 11

        def endpoint(n_steps, heun=True):
            config = SamplerConfig(n_steps=n_steps, sigma_max=80.0, guidance_mode=GuidanceMode.NONE, heun=heun)
            return run_chain(self.prior, config, seed)[0]

        reference = endpoint(320)
        z0 = initial_state(1, 80.0, seed).z[0]
        self.assertLess(abs(reference - _flow_map(z0, mean, variance, 80.0)), 1e-4)
        heun_ratio = abs(endpoint(20) - reference) / abs(endpoint(40) - reference)
        self.assertGreater(heun_ratio, 3.0)
        self.assertLess(abs(endpoint(20) - reference), abs(endpoint(20, heun=False) - reference))

    def test_reverse_step_rejects_bad_levels(self):
        """sigma_next must lie below sigma_k"""
        state = initial_state(1, 1.0, 0)
        with self.assertRaises(InvalidRequestError):
            reverse_step(self.prior, state, 0.5, 0.7)

    def test_unconditional_deterministic(self):
        """Same seed, same sample; batched sampling has the requested shape"""
        config = SamplerConfig(n_steps=15)
        first = sample_unconditional(self.prior, config, rng_seed=4)
        np.testing.assert_array_equal(first, sample_unconditional(self.prior, config, rng_seed=4))
        self.assertEqual(sample_unconditional(self.prior, config, rng_seed=4, n_samples=6).shape, (6, 1))

    def test_stochastic_variant_seeded(self):
        """The stochastic sampler is reproducible from its seed"""
        prior = GaussianMixturePrior.single(np.zeros(4), 1.0)
        config = SamplerConfig(n_steps=12, stochastic=True, guidance_mode=GuidanceMode.NONE)
        np.testing.assert_array_equal(run_chain(prior, config, 5), run_chain(prior, config, 5))
        self.assertFalse(np.array_equal(run_chain(prior, config, 5), run_chain(prior, config, 6)))

    def test_guidance_pulls_toward_measurements(self):
        """Guided chains end closer to the readings than unguided ones"""
        prior = GaussianMixturePrior.single(np.zeros(6), 1.0)
        selection = SensorSelection(indices=[0, 3])
        y = np.array([1.2, -0.8])
        config = SamplerConfig(n_steps=30)
        guided = np.mean([
            np.linalg.norm(dps_reconstruct(prior, selection, y, chain_seed(1, i), config)[[0, 3]] - y)
            for i in range(8)
        ])
        free = np.mean([
            np.linalg.norm(sample_unconditional(prior, config, rng_seed=chain_seed(1, i))[[0, 3]] - y)
            for i in range(8)
        ])
        self.assertLess(guided, free)

    def test_step_record(self):
        """The optional record holds one entry per step"""
        prior = GaussianMixturePrior.single(np.zeros(3), 1.0)
        record = []
        dps_reconstruct(prior, SensorSelection(indices=[1]), [0.5], 0, SamplerConfig(n_steps=8), record=record)
        self.assertEqual(len(record), 8)
        self.assertEqual(record[-1]["sigma"], 0.0)

    def test_measurement_count_checked(self):
        """y must have one value per sensor"""
        prior = GaussianMixturePrior.single(np.zeros(3), 1.0)
        with self.assertRaises(InvalidRequestError):
            dps_reconstruct(prior, SensorSelection(indices=[0, 1]), [0.5], 0, SamplerConfig())

    def test_guidance_model(self):
        """MeasurementGuidance coerces scalar readings"""
        guidance = MeasurementGuidance(selection=SensorSelection(indices=[2]), y=0.3)
        self.assertEqual(guidance.y.shape, (1,))


class TestSigmaMax(unittest.TestCase):
    """Largest noise level of the schedule"""

    def test_prior_scale(self):
        """RMS scale includes the component means"""
        prior = GaussianMixturePrior(weights=[0.3, 0.7], means=[[-5.0], [5.0]], variances=[[0.1], [0.1]])
        self.assertAlmostEqual(prior_scale(prior), np.sqrt(25.1))

    def test_default_follows_prior_scale(self):
        """Unset sigma_max is 80 times the prior RMS scale and scales with the data"""
        prior = GaussianMixturePrior.single(np.zeros(3), 4.0)
        self.assertAlmostEqual(schedule_for(SamplerConfig(), prior).sigma_max, 160.0)
        scaled = GaussianMixturePrior.single(np.zeros(3), 400.0)
        self.assertAlmostEqual(resolve_sigma_max(SamplerConfig(), scaled), 1600.0)

    def test_explicit_value_kept(self):
        """An explicit sigma_max overrides the prior scale"""
        prior = GaussianMixturePrior.single(np.zeros(3), 4.0)
        self.assertEqual(schedule_for(SamplerConfig(sigma_max=80.0), prior).sigma_max, 80.0)
        with self.assertRaises(ValueError):
            SamplerConfig(sigma_min=1.0, sigma_max=0.5)


class TestUnconditional(unittest.TestCase):
    """Monte-Carlo checks of unconditional sampling"""

    def test_single_gaussian_moments(self):
        """Sample mean and variance match a diagonal Gaussian prior within 3 sigma"""
        mean = np.array([0.2, -0.3, 0.0])
        variance = np.array([1.0, 0.5, 2.0])
        n_samples = 10_000
        samples = sample_unconditional(
            GaussianMixturePrior.single(mean, variance), SamplerConfig(), rng_seed=1, n_samples=n_samples
        )
        self.assertEqual(samples.shape, (n_samples, 3))
        mean_error = np.abs(samples.mean(axis=0) - mean)
        var_error = np.abs(samples.var(axis=0, ddof=1) - variance)
        self.assertTrue(np.all(mean_error < 3 * np.sqrt(variance / n_samples)), mean_error)
        self.assertTrue(np.all(var_error < 3 * variance * np.sqrt(2.0 / n_samples)), var_error)

    def test_mixture_mode_frequencies(self):
        """The share of samples in each mode matches the weights within 3 binomial sigma"""
        prior = GaussianMixturePrior(weights=[0.3, 0.7], means=[[-5.0], [5.0]], variances=[[0.1], [0.1]])
        n_samples = 20_000
        samples = sample_unconditional(prior, SamplerConfig(), rng_seed=2, n_samples=n_samples)
        positive = float(np.mean(samples[:, 0] > 0))
        self.assertLess(abs(positive - 0.7), 3 * np.sqrt(0.7 * 0.3 / n_samples))

    def test_no_sensors_reduces_to_unconditional(self):
        """DPS with m = 0 returns the unconditional sample of the same seed"""
        prior = GaussianMixturePrior(
            weights=[0.4, 0.6],
            means=np.random.default_rng(3).standard_normal((2, 5)),
            variances=np.full((2, 5), 0.3),
        )
        config = SamplerConfig(n_steps=12)
        guided = dps_reconstruct(prior, SensorSelection(indices=[]), [], 4, config)
        np.testing.assert_array_equal(guided, sample_unconditional(prior, config, rng_seed=4))


class TestFullyObserved(unittest.TestCase):
    """Every node carries a sensor"""

    def test_error_vanishes_with_sigma_eta(self):
        """rel-L2 stays under 2% at m = N and shrinks as sigma_eta decreases"""
        prior, _ = gen_gmm_prior(16, 3, rng_seed=2, variance=1.0)
        x_star = sample_prior(prior, 5)
        selection = SensorSelection(indices=range(16))
        errors = []
        for sigma_eta in (0.1, 0.01, 0.001):
            estimate = dps_reconstruct(prior, selection, x_star, 3, SamplerConfig(sigma_eta=sigma_eta))
            errors.append(relative_l2(estimate, x_star))
        self.assertTrue(all(error <= 0.02 for error in errors), errors)
        self.assertLess(errors[-1], errors[0])


class TestGaussianOracle(unittest.TestCase):
    """Exact conjugate posterior"""

    def test_unobserved_nodes_keep_prior(self):
        """Nodes without sensors keep the prior mean and variance"""
        mean0, var0 = np.arange(5.0), np.full(5, 0.5)
        mean, var = gaussian_posterior_oracle(mean0, var0, SensorSelection(indices=[2]), [10.0], 0.1)
        np.testing.assert_allclose(mean[[0, 1, 3, 4]], mean0[[0, 1, 3, 4]])
        np.testing.assert_allclose(var[[0, 1, 3, 4]], 0.5)

    def test_observed_node_formula(self):
        """Observed nodes follow the scalar conjugate update"""
        mean, var = gaussian_posterior_oracle([1.0, 0.0], [0.5, 0.5], SensorSelection(indices=[0]), [2.0], 0.5)
        self.assertAlmostEqual(mean[0], 1.0 + 0.5 / 0.75 * 1.0)
        self.assertAlmostEqual(var[0], 0.5 - 0.25 / 0.75)

    def test_invalid_variances(self):
        """Non-positive prior variances are rejected"""
        with self.assertRaises(InvalidRequestError):
            gaussian_posterior_oracle([0.0], [0.0], SensorSelection(indices=[0]), [1.0], 0.1)


if __name__ == "__main__":
    unittest.main()
