"""
sampler.py - Variance-exploding reverse diffusion with DPS guidance

The default integrator is the deterministic probability-flow ODE with Heun
steps on a Karras schedule; a stochastic Euler-Maruyama variant is available.
Guidance subtracts alpha_k times the gradient of the measurement misfit of the
Tweedie estimate, computed by diffusion.gmm.guidance_gradient.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import linalg

from ..errors import InvalidRequestError
from ..models.prior import GaussianMixturePrior
from ..models.sampler import ChainState, GuidanceMode, SamplerConfig, SigmaSchedule
from ..models.sensing import SensorSelection
from ..seeding import derive_seed
from .gmm import denoise, guidance_gradient, prior_scale

logger = logging.getLogger("diffusion.sampler")

# sigma_max in units of the prior RMS scale
SIGMA_MAX_SCALE = 80.0


def karras_schedule(n_steps: int, sigma_min: float, sigma_max: float, rho: float = 7.0) -> SigmaSchedule:
    """
    Karras noise levels with a terminal 0.

    sigma_i = (sigma_max^(1/rho) + i/(n-1) (sigma_min^(1/rho) - sigma_max^(1/rho)))^rho
    """
    if n_steps < 2 or not 0 < sigma_min < sigma_max or rho <= 0:
        raise InvalidRequestError(
            f"Invalid schedule: n_steps={n_steps}, sigma_min={sigma_min}, sigma_max={sigma_max}, rho={rho}"
        )
    ramp = np.arange(n_steps) / (n_steps - 1)
    inv_rho = 1.0 / rho
    sigmas = (sigma_max ** inv_rho + ramp * (sigma_min ** inv_rho - sigma_max ** inv_rho)) ** rho
    sigmas[0], sigmas[-1] = sigma_max, sigma_min
    return SigmaSchedule(sigmas=np.append(sigmas, 0.0))


def resolve_sigma_max(config: SamplerConfig, prior: GaussianMixturePrior) -> float:
    """config.sigma_max, or SIGMA_MAX_SCALE times the prior RMS scale when unset."""
    if config.sigma_max is not None:
        return config.sigma_max
    return max(SIGMA_MAX_SCALE * prior_scale(prior), 10.0 * config.sigma_min)


def schedule_for(config: SamplerConfig, prior: GaussianMixturePrior) -> SigmaSchedule:
    return karras_schedule(config.n_steps, config.sigma_min, resolve_sigma_max(config, prior), config.rho_schedule)


def chain_seed(seed: int, chain: int) -> int:
    """Seed of chain `chain` in an ensemble started from `seed`."""
    return derive_seed(seed, "chain", chain)


def guidance_weight(sigma_k: float, sigma_next: float, sigma_eta: float, alpha_max: float = 10.0) -> float:
    """
    Step size alpha_k of the guidance term.

    The linear weight w_k = clip(sigma_k / sigma_eta, 0, alpha_max) is 1 at
    sigma = sigma_eta. It is scaled by the relative step length and capped at
    1, then multiplied by sigma_eta^2 to cancel the 1/sigma_eta^2 inside the
    misfit gradient. This differs from taking alpha_k = w_k directly: one
    step applies at most one full misfit correction.
    """
    if sigma_k <= 0:
        return 0.0
    weight = float(np.clip(sigma_k / sigma_eta, 0.0, alpha_max))
    return min(weight * (sigma_k - sigma_next) / sigma_k, 1.0) * sigma_eta ** 2


class MeasurementGuidance(BaseModel):
    """Sensors, readings and likelihood scale of the DPS term"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    selection: SensorSelection
    y: np.ndarray = Field(..., description="Length-m measurements")
    sigma_eta: float = Field(0.1, gt=0)

    @field_validator("y", mode="before")
    @classmethod
    def _coerce_y(cls, value):
        return np.atleast_1d(np.asarray(value, dtype=float))

    def gradient(self, prior: GaussianMixturePrior, z: np.ndarray, sigma: float) -> np.ndarray:
        return guidance_gradient(prior, z, sigma, self.selection, self.y, self.sigma_eta)


def reverse_step(
    prior: GaussianMixturePrior,
    state: ChainState,
    sigma_k: float,
    sigma_next: float,
    guidance: Optional[MeasurementGuidance] = None,
    alpha_k: float = 0.0,
    heun: bool = True,
    rng_seed: Optional[int] = None,
    stochastic: bool = False,
    guidance_clip: Optional[float] = None,
) -> ChainState:
    """
    Advance one chain from sigma_k to sigma_next.

    Args:
        prior: Gaussian-mixture denoiser
        state: Current chain state
        sigma_k: Current noise level
        sigma_next: Next noise level, 0 <= sigma_next < sigma_k
        guidance: Measurement term, None for unconditional steps
        alpha_k: Guidance step size
        heun: Second-order correction when sigma_next > 0
        rng_seed: Noise seed of the stochastic variant
        stochastic: Euler-Maruyama step of the reverse SDE
        guidance_clip: Cap on the guidance increment in units of sigma_k sqrt(N)

    Returns:
        New ChainState one schedule index further
    """
    if not sigma_k > sigma_next >= 0:
        raise InvalidRequestError(f"Reverse step needs sigma_k > sigma_next >= 0, got {sigma_k}, {sigma_next}")
    z = state.z
    estimate = denoise(prior, z, sigma_k)

    if stochastic:
        variance = sigma_k ** 2 - sigma_next ** 2
        noise = np.random.default_rng(rng_seed).standard_normal(z.shape)
        z_next = z + variance * (estimate - z) / sigma_k ** 2 + np.sqrt(variance) * noise
    else:
        slope = (z - estimate) / sigma_k
        z_next = z + (sigma_next - sigma_k) * slope
        if heun and sigma_next > 0:
            slope_next = (z_next - denoise(prior, z_next, sigma_next)) / sigma_next
            z_next = z + (sigma_next - sigma_k) * 0.5 * (slope + slope_next)

    if guidance is not None and alpha_k > 0:
        increment = alpha_k * guidance.gradient(prior, z, sigma_k)
        if guidance_clip is not None:
            limit = guidance_clip * sigma_k * np.sqrt(z.shape[-1])
            norm = float(np.linalg.norm(increment))
            if norm > limit:
                increment *= limit / norm
        z_next = z_next - increment

    return ChainState(z=z_next, sigma_index=state.sigma_index + 1, log_like=state.log_like)


def advance(
    prior: GaussianMixturePrior,
    state: ChainState,
    schedule: SigmaSchedule,
    config: SamplerConfig,
    guidance: Optional[MeasurementGuidance],
    seed: int,
) -> ChainState:
    """Take the schedule step at state.sigma_index with the settings of config."""
    k = state.sigma_index
    sigma_k, sigma_next = float(schedule.sigmas[k]), float(schedule.sigmas[k + 1])
    use_guidance = guidance if config.guidance_mode == GuidanceMode.DPS else None
    alpha_k = 0.0
    if use_guidance is not None:
        alpha_k = guidance_weight(sigma_k, sigma_next, config.sigma_eta, config.alpha_max)
    return reverse_step(
        prior, state, sigma_k, sigma_next,
        guidance=use_guidance,
        alpha_k=alpha_k,
        heun=config.heun,
        rng_seed=derive_seed(seed, "step", k) if config.stochastic else None,
        stochastic=config.stochastic,
        guidance_clip=config.guidance_clip,
    )


def initial_state(n_nodes: int, sigma_max: float, seed: int, n_samples: Optional[int] = None) -> ChainState:
    """z ~ N(0, sigma_max^2 I)"""
    shape = (n_nodes,) if n_samples is None else (n_samples, n_nodes)
    return ChainState(z=np.random.default_rng(seed).standard_normal(shape) * sigma_max)


def run_chain(
    prior: GaussianMixturePrior,
    config: SamplerConfig,
    seed: int,
    guidance: Optional[MeasurementGuidance] = None,
    n_samples: Optional[int] = None,
    record: Optional[List[Dict[str, float]]] = None,
) -> np.ndarray:
    """Run the whole schedule from a seeded start and return the final state."""
    schedule = schedule_for(config, prior)
    state = initial_state(prior.n_nodes, schedule.sigma_max, seed, n_samples)
    for _ in range(schedule.n_steps):
        state = advance(prior, state, schedule, config, guidance, seed)
        if record is not None and guidance is not None:
            sigma = float(schedule.sigmas[state.sigma_index])
            residual = denoise(prior, state.z, sigma)[..., guidance.selection.as_array()] - guidance.y
            record.append({"step": state.sigma_index, "sigma": sigma, "residual_norm": float(np.linalg.norm(residual))})
    return state.z


def sample_unconditional(
    prior: GaussianMixturePrior,
    config: SamplerConfig,
    rng_seed: int = 0,
    n_samples: Optional[int] = None,
) -> np.ndarray:
    """
    Unconditional prior samples through the reverse diffusion.

    Returns:
        One field, or an (n_samples, N) batch
    """
    if config.guidance_mode != GuidanceMode.NONE:
        config = config.model_copy(update={"guidance_mode": GuidanceMode.NONE})
    return run_chain(prior, config, rng_seed, n_samples=n_samples)


def dps_reconstruct(
    prior: GaussianMixturePrior,
    selection: SensorSelection,
    y,
    x_init_seed: int,
    config: SamplerConfig,
    record: Optional[List[Dict[str, float]]] = None,
) -> np.ndarray:
    """
    Guided reverse diffusion from measurements y at the selected nodes.

    Args:
        prior: Gaussian-mixture denoiser
        selection: Sensor nodes
        y: Measurements, one per sensor
        x_init_seed: Seed of the initial state (and of the stochastic steps)
        config: Sampler settings; guidance_mode none gives an unconditional sample
        record: Optional list that receives per-step sigma and residual norm

    Returns:
        Reconstructed field
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape[0] != selection.m:
        raise InvalidRequestError(f"{selection.m} sensors but {y.shape[0]} measurements")
    if selection.m and max(selection.indices) >= prior.n_nodes:
        raise InvalidRequestError(f"Sensor index out of range for {prior.n_nodes} nodes")
    guidance = MeasurementGuidance(selection=selection, y=y, sigma_eta=config.sigma_eta)
    return run_chain(prior, config, x_init_seed, guidance=guidance, record=record)


def gaussian_posterior_oracle(
    mean0,
    var0,
    selection: SensorSelection,
    y,
    sigma_eta: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact posterior of N(mean0, diag(var0)) under y = S x + N(0, sigma_eta^2 I).

    Returns:
        (posterior mean, posterior covariance diagonal)
    """
    mean0 = np.asarray(mean0, dtype=float)
    var0 = np.broadcast_to(np.asarray(var0, dtype=float), mean0.shape)
    if np.any(var0 <= 0) or sigma_eta <= 0:
        raise InvalidRequestError("Prior variances and sigma_eta must be positive")
    indices = selection.as_array()
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if indices.size == 0:
        return mean0.copy(), var0.copy()
    # Sigma_0 S^T is the selected columns of diag(var0)
    cross = np.zeros((mean0.shape[0], indices.size))
    cross[indices, np.arange(indices.size)] = var0[indices]
    innovation = np.diag(var0[indices]) + sigma_eta ** 2 * np.eye(indices.size)
    gain = linalg.solve(innovation, cross.T, assume_a="pos").T
    mean = mean0 + gain @ (y - mean0[indices])
    cov_diag = var0 - np.einsum("ij,ij->i", gain, cross)
    return mean, cov_diag
