"""
gmm.py - Analytic Gaussian-mixture denoiser

For a prior sum_k w_k N(m_k, diag(v_k)) the noised marginal at level sigma is
sum_k w_k N(m_k, diag(v_k + sigma^2)), so the score, the Tweedie denoiser
E[x0 | x_sigma = x] and its Jacobian are all closed form. Every function takes
x of shape (N,) or (B, N) and returns the matching shape.
"""

import json
import logging
import os
from typing import Optional, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.special import logsumexp

from ..errors import ConfigError, InvalidRequestError, MissingFileError
from ..models.prior import GaussianMixturePrior
from ..models.sensing import SensorSelection, SnapshotSet

logger = logging.getLogger("diffusion.gmm")

LOG_2PI = np.log(2.0 * np.pi)


def _batch(x) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim != 2:
        raise InvalidRequestError(f"Expected a field or a batch of fields, got shape {x.shape}")
    return x, False


def _unbatch(values: np.ndarray, single: bool):
    return values[0] if single else values


def _components(prior: GaussianMixturePrior, x: np.ndarray, sigma: float):
    """
    Per-component terms at noise level sigma for a batch x of shape (B, N).

    Returns:
        (log_joint (B, K), gamma (B, K), total variance s (K, N))
    """
    if sigma < 0:
        raise InvalidRequestError(f"sigma must be non-negative, got {sigma}")
    if x.shape[1] != prior.n_nodes:
        raise InvalidRequestError(f"Field has {x.shape[1]} nodes, prior has {prior.n_nodes}")
    s = prior.variances + sigma ** 2
    diff = x[:, None, :] - prior.means[None, :, :]
    with np.errstate(divide="ignore"):
        log_w = np.log(prior.weights)
    log_joint = log_w[None, :] - 0.5 * (
        np.sum(diff ** 2 / s[None], axis=-1) + np.sum(np.log(s), axis=-1)[None, :] + prior.n_nodes * LOG_2PI
    )
    gamma = np.exp(log_joint - logsumexp(log_joint, axis=-1, keepdims=True))
    return log_joint, gamma, s


def responsibilities(prior: GaussianMixturePrior, x, sigma: float) -> np.ndarray:
    """Posterior component probabilities gamma_k(x) at noise level sigma."""
    xb, single = _batch(x)
    _, gamma, _ = _components(prior, xb, sigma)
    return _unbatch(gamma, single)


def log_density_noised(prior: GaussianMixturePrior, x, sigma: float):
    """log p_sigma(x), stabilized with log-sum-exp."""
    xb, single = _batch(x)
    log_joint, _, _ = _components(prior, xb, sigma)
    return _unbatch(logsumexp(log_joint, axis=-1), single)


def score_noised(prior: GaussianMixturePrior, x, sigma: float) -> np.ndarray:
    """grad_x log p_sigma(x) = sum_k gamma_k (m_k - x) / s_k"""
    xb, single = _batch(x)
    _, gamma, s = _components(prior, xb, sigma)
    a = (prior.means[None] - xb[:, None, :]) / s[None]
    return _unbatch(np.einsum("bk,bkn->bn", gamma, a), single)


def denoise(prior: GaussianMixturePrior, x, sigma: float) -> np.ndarray:
    """
    Tweedie estimate E[x0 | x_sigma = x].

    Args:
        prior: Gaussian-mixture prior
        x: Noisy field(s)
        sigma: Noise level; sigma = 0 returns x unchanged

    Returns:
        sum_k gamma_k (x v_k + sigma^2 m_k) / (v_k + sigma^2)
    """
    xb, single = _batch(x)
    if sigma == 0:
        return _unbatch(xb.copy(), single)
    _, gamma, s = _components(prior, xb, sigma)
    mu = (xb[:, None, :] * prior.variances[None] + sigma ** 2 * prior.means[None]) / s[None]
    return _unbatch(np.einsum("bk,bkn->bn", gamma, mu), single)


def _jacobian_terms(prior: GaussianMixturePrior, xb: np.ndarray, sigma: float):
    if sigma <= 0:
        raise InvalidRequestError("Denoiser Jacobian products need sigma > 0")
    _, gamma, s = _components(prior, xb, sigma)
    shrink = prior.variances / s
    mu = xb[:, None, :] * shrink[None] + sigma ** 2 * prior.means[None] / s[None]
    a = (prior.means[None] - xb[:, None, :]) / s[None]
    a_bar = np.einsum("bk,bkn->bn", gamma, a)
    d = np.einsum("bk,bkn->bn", gamma, mu)
    return gamma, shrink, mu, a - a_bar[:, None, :], d


def denoiser_jvp(prior: GaussianMixturePrior, x, sigma: float, v) -> np.ndarray:
    """
    Jacobian-vector product (dD/dx) v.

    J v = sum_k gamma_k (v_k / s_k) * v + sum_k gamma_k mu_k <a_k - a_bar, v>
    """
    xb, single = _batch(x)
    vb = np.broadcast_to(np.asarray(v, dtype=float), xb.shape)
    gamma, shrink, mu, centered, _ = _jacobian_terms(prior, xb, sigma)
    diagonal = np.einsum("bk,kn->bn", gamma, shrink) * vb
    weights = gamma * np.einsum("bkn,bn->bk", centered, vb)
    return _unbatch(diagonal + np.einsum("bk,bkn->bn", weights, mu), single)


def denoiser_vjp(prior: GaussianMixturePrior, x, sigma: float, u) -> np.ndarray:
    """Transpose action J^T u = sum_k gamma_k (v_k / s_k) * u + sum_k gamma_k (a_k - a_bar) <mu_k - D, u>"""
    xb, single = _batch(x)
    ub = np.broadcast_to(np.asarray(u, dtype=float), xb.shape)
    gamma, shrink, mu, centered, d = _jacobian_terms(prior, xb, sigma)
    diagonal = np.einsum("bk,kn->bn", gamma, shrink) * ub
    weights = gamma * np.einsum("bkn,bn->bk", mu - d[:, None, :], ub)
    return _unbatch(diagonal + np.einsum("bk,bkn->bn", weights, centered), single)


def guidance_gradient(
    prior: GaussianMixturePrior,
    x,
    sigma: float,
    selection: SensorSelection,
    y,
    sigma_eta: float,
) -> np.ndarray:
    """
    Gradient of Phi(D(x, sigma), y) = ||S D(x, sigma) - y||^2 / (2 sigma_eta^2).

    Returns:
        J^T S^T (S D - y) / sigma_eta^2, zero when nothing is observed
    """
    if sigma_eta <= 0:
        raise InvalidRequestError(f"sigma_eta must be positive, got {sigma_eta}")
    xb, single = _batch(x)
    indices = selection.as_array()
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != indices.shape[0]:
        raise InvalidRequestError(f"{indices.shape[0]} sensors but {y.shape[-1]} measurements")
    if indices.size == 0:
        return _unbatch(np.zeros_like(xb), single)
    d = denoise(prior, xb, sigma)
    lifted = np.zeros_like(xb)
    lifted[:, indices] = d[:, indices] - y
    return _unbatch(denoiser_vjp(prior, xb, sigma, lifted) / sigma_eta ** 2, single)


def measurement_log_likelihood(estimate, selection: SensorSelection, y, sigma_eta: float):
    """l = -||S x - y||^2 / (2 sigma_eta^2) for one estimate or a batch."""
    estimate = np.asarray(estimate, dtype=float)
    residual = estimate[..., selection.as_array()] - np.asarray(y, dtype=float)
    return -np.sum(residual ** 2, axis=-1) / (2.0 * sigma_eta ** 2)


def sample_prior(prior: GaussianMixturePrior, rng_seed: Optional[int] = None, n_samples: Optional[int] = None):
    """
    Draw x0 ~ P: a component by weight, then its diagonal Gaussian.

    Returns a single field when n_samples is None, else an (n_samples, N) batch.
    """
    rng = np.random.default_rng(rng_seed)
    count = 1 if n_samples is None else n_samples
    labels = rng.choice(prior.n_components, size=count, p=prior.weights)
    noise = rng.standard_normal((count, prior.n_nodes))
    samples = prior.means[labels] + np.sqrt(prior.variances[labels]) * noise
    return samples[0] if n_samples is None else samples


def prior_scale(prior: GaussianMixturePrior) -> float:
    """Root-mean-square field value sqrt(mean_n E[x_n^2]) under the prior."""
    second_moment = prior.weights @ (prior.variances + prior.means ** 2)
    return float(np.sqrt(np.mean(second_moment)))


def empirical_prior(snapshots: SnapshotSet, variance: float = 1e-3) -> GaussianMixturePrior:
    """One equally weighted component per snapshot with isotropic variance."""
    if variance <= 0:
        raise InvalidRequestError(f"variance must be positive, got {variance}")
    n_snapshots = snapshots.n_snapshots
    return GaussianMixturePrior(
        weights=np.full(n_snapshots, 1.0 / n_snapshots),
        means=snapshots.data.T.copy(),
        variances=np.full((n_snapshots, snapshots.n_nodes), variance),
    )


def save_prior(prior: GaussianMixturePrior, path: str) -> None:
    with open(path, "w") as f:
        f.write(prior.model_dump_json())
    logger.info(f"Saved {prior.n_components}-component prior to {path}")


def load_prior(path: str) -> GaussianMixturePrior:
    """Load a prior from JSON with keys weights, means, variances."""
    if not os.path.isfile(path):
        raise MissingFileError(f"No such file: {path}")
    try:
        with open(path) as f:
            return GaussianMixturePrior.model_validate(json.load(f))
    except (json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"Invalid prior file {path}: {e}")
