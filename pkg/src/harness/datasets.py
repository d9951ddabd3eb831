"""
datasets.py - Synthetic snapshot generators and dataset assembly

Generators produce snapshot sets on the unit interval (or unit square) and a
matching Gaussian-mixture prior. Ground-truth fields for a benchmark are
drawn from the same generator on a seed stream separate from the snapshots.
"""

import logging
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..diffusion.gmm import empirical_prior, sample_prior
from ..errors import InvalidRequestError
from ..models.experiment import DatasetName, DatasetSpec
from ..models.prior import GaussianMixturePrior
from ..models.sensing import Grid, SnapshotSet
from ..seeding import derive_seed
from ..sensing.measurement import grid_for

logger = logging.getLogger("harness.datasets")


def stream_seed(base: int, tag: str, *keys) -> int:
    """Seed of the named stream ("snapshots", "truth", "placement", "noise", "sampler", "online")."""
    return derive_seed(base, tag, *keys)


def _bumps(grid: Grid, centers: np.ndarray, amplitudes: np.ndarray, width: float) -> np.ndarray:
    """(N, M) matrix of Gaussian bumps a_n exp(-|xi - c_n|^2 / 2w^2)"""
    sq_dist = np.sum((grid.coords[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
    return amplitudes[None, :] * np.exp(-sq_dist / (2.0 * width ** 2))


def gen_bump_manifold(
    n_nodes: int,
    n_snapshots: int,
    width: float = 0.1,
    amplitude_range: Tuple[float, float] = (0.5, 1.5),
    rng_seed: int = 0,
    dim: int = 1,
) -> SnapshotSet:
    """
    Gaussian bumps with uniform random center and amplitude.

    The snapshots lie on a two-parameter nonlinear manifold (d + 1 in 2-D).
    """
    if n_nodes < 8:
        raise InvalidRequestError(f"Bump datasets need at least 8 nodes, got {n_nodes}")
    grid = grid_for(n_nodes, dim)
    rng = np.random.default_rng(rng_seed)
    centers = rng.uniform(0.0, 1.0, size=(n_snapshots, grid.dim))
    amplitudes = rng.uniform(amplitude_range[0], amplitude_range[1], size=n_snapshots)
    return SnapshotSet(grid=grid, data=_bumps(grid, centers, amplitudes, width))


def gen_fixed_bumps(
    n_nodes: int,
    n_snapshots: int,
    centers: Sequence[float] = (0.35, 0.65),
    width: float = 0.05,
    amplitude_range: Tuple[float, float] = (0.5, 1.5),
    rng_seed: int = 0,
) -> SnapshotSet:
    """Sums of bumps at fixed centers with independent random amplitudes; rank len(centers)."""
    grid = grid_for(n_nodes, 1)
    rng = np.random.default_rng(rng_seed)
    fixed = np.asarray(centers, dtype=float)[:, None]
    shapes = _bumps(grid, fixed, np.ones(fixed.shape[0]), width)
    amplitudes = rng.uniform(amplitude_range[0], amplitude_range[1], size=(fixed.shape[0], n_snapshots))
    return SnapshotSet(grid=grid, data=shapes @ amplitudes)


def _subspace_bases(n_nodes: int, n_subspaces: int, dim_per: int, rng_seed: int) -> np.ndarray:
    rng = np.random.default_rng(rng_seed)
    bases = np.empty((n_subspaces, n_nodes, dim_per))
    for s in range(n_subspaces):
        q, _ = np.linalg.qr(rng.standard_normal((n_nodes, dim_per)))
        bases[s] = q
    return bases


def _union_samples(bases: np.ndarray, count: int, rng_seed: int) -> np.ndarray:
    rng = np.random.default_rng(rng_seed)
    labels = rng.integers(bases.shape[0], size=count)
    coefficients = rng.standard_normal((count, bases.shape[2]))
    return np.einsum("mnk,mk->nm", bases[labels], coefficients)


def gen_union_subspaces(
    n_nodes: int,
    n_snapshots: int,
    n_subspaces: int = 1,
    dim_per: int = 2,
    rng_seed: int = 0,
) -> SnapshotSet:
    """
    Snapshots from a union of random subspaces.

    Each subspace has a random orthonormal basis; each snapshot is a Gaussian
    coefficient vector in a uniformly chosen subspace.
    """
    if n_subspaces * dim_per > n_nodes:
        raise InvalidRequestError(f"{n_subspaces} subspaces of dimension {dim_per} do not fit in R^{n_nodes}")
    bases = _subspace_bases(n_nodes, n_subspaces, dim_per, derive_seed(rng_seed, "bases"))
    data = _union_samples(bases, n_snapshots, derive_seed(rng_seed, "coefficients"))
    return SnapshotSet(grid=grid_for(n_nodes, 1), data=data)


def gen_gmm_prior(
    n_nodes: int,
    n_components: int,
    separation: float = 1.0,
    rng_seed: int = 0,
    n_snapshots: int = 200,
    width: float = 0.1,
    variance: float = 1e-2,
) -> Tuple[GaussianMixturePrior, SnapshotSet]:
    """
    Mixture whose component means are bump-manifold fields scaled by separation.

    Returns:
        (prior, n_snapshots prior samples as a SnapshotSet)
    """
    if n_components < 1:
        raise InvalidRequestError("A mixture needs at least one component")
    means = gen_bump_manifold(n_nodes, n_components, width, (1.0, 1.0), derive_seed(rng_seed, "means"))
    prior = GaussianMixturePrior(
        weights=np.full(n_components, 1.0 / n_components),
        means=separation * means.data.T,
        variances=np.full((n_components, n_nodes), variance),
    )
    samples = sample_prior(prior, derive_seed(rng_seed, "samples"), n_samples=n_snapshots)
    return prior, SnapshotSet(grid=means.grid, data=samples.T)


class Dataset(BaseModel):
    """Snapshots plus the prior the sampler denoises with"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    spec: DatasetSpec
    snapshots: SnapshotSet
    prior: GaussianMixturePrior
    snapshot_seed: int

    @property
    def grid(self) -> Grid:
        return self.snapshots.grid


def generate_snapshots(spec: DatasetSpec, n_snapshots: int, rng_seed: int) -> SnapshotSet:
    """Run the generator named by the dataset spec with an explicit count and seed."""
    if spec.name == DatasetName.BUMP_MANIFOLD:
        return gen_bump_manifold(spec.n_nodes, n_snapshots, spec.width, spec.amplitude_range, rng_seed, spec.dim)
    if spec.name == DatasetName.FIXED_BUMPS:
        return gen_fixed_bumps(spec.n_nodes, n_snapshots, spec.centers, spec.width, spec.amplitude_range, rng_seed)
    if spec.name == DatasetName.UNION_SUBSPACES:
        return gen_union_subspaces(spec.n_nodes, n_snapshots, spec.n_subspaces, spec.dim_per, rng_seed)
    _, samples = gen_gmm_prior(
        spec.n_nodes, spec.n_components, spec.separation, rng_seed,
        n_snapshots=n_snapshots, width=spec.width, variance=spec.component_variance,
    )
    return samples


def build_dataset(spec: DatasetSpec) -> Dataset:
    """Generate the snapshot set and its prior from spec.seed."""
    seed = stream_seed(spec.seed, "snapshots")
    if spec.name == DatasetName.GMM:
        prior, snapshots = gen_gmm_prior(
            spec.n_nodes, spec.n_components, spec.separation, seed,
            n_snapshots=spec.n_snapshots, width=spec.width, variance=spec.component_variance,
        )
    else:
        snapshots = generate_snapshots(spec, spec.n_snapshots, seed)
        prior = empirical_prior(snapshots, spec.prior_variance)
    logger.info(f"Built {spec.name.value}: N={snapshots.n_nodes}, M={snapshots.n_snapshots}, K={prior.n_components}")
    return Dataset(spec=spec, snapshots=snapshots, prior=prior, snapshot_seed=seed)


def draw_truth(dataset: Dataset, truth_seed: int) -> np.ndarray:
    """A held-out ground-truth field from the dataset's generator."""
    spec = dataset.spec
    if spec.name == DatasetName.GMM:
        return sample_prior(dataset.prior, truth_seed)
    if spec.name == DatasetName.UNION_SUBSPACES:
        bases = _subspace_bases(spec.n_nodes, spec.n_subspaces, spec.dim_per, derive_seed(dataset.snapshot_seed, "bases"))
        return _union_samples(bases, 1, truth_seed)[:, 0]
    return generate_snapshots(spec, 1, truth_seed).data[:, 0]
