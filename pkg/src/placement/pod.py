"""
pod.py - POD basis and SSPOR placement

The POD basis is the leading left singular vectors of the mean-adjusted
snapshot matrix. SSPOR places sensors at the column pivots of the QR
decomposition of V^T, computed with the same largest-residual deflation the
greedy Christoffel strategy uses.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..errors import DegenerateDataError, InvalidRequestError
from ..models.scores import PodBasis
from ..models.sensing import SensorSelection
from .greedy import _check_budget, _fill, greedy_deflation, mean_adjust

logger = logging.getLogger("placement.pod")


def pod_basis(snapshots, r: int, clip_to_rank: bool = True) -> PodBasis:
    """
    Compute r POD modes.

    Args:
        snapshots: SnapshotSet or an (N, M) matrix
        r: Requested number of modes, 1 <= r <= min(N, M)
        clip_to_rank: Reduce r to the numerical rank (flagged) instead of
            returning modes with zero energy

    Returns:
        PodBasis with orthonormal modes and squared singular values

    Raises:
        DegenerateDataError: the mean-adjusted data is identically zero
    """
    X, _ = mean_adjust(snapshots)
    n_nodes, n_snapshots = X.shape
    if not 1 <= r <= min(n_nodes, n_snapshots):
        raise InvalidRequestError(f"POD rank r={r} must lie in [1, {min(n_nodes, n_snapshots)}]")

    U, s, _ = np.linalg.svd(X, full_matrices=False)
    tol = max(n_nodes, n_snapshots) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    numerical_rank = int(np.count_nonzero(s > tol))
    if numerical_rank == 0:
        raise DegenerateDataError("Snapshots are constant; the POD basis is empty")

    clipped = False
    if clip_to_rank and r > numerical_rank:
        logger.warning(f"Requested {r} POD modes but the data has numerical rank {numerical_rank}; clipping")
        r = numerical_rank
        clipped = True

    energies = s[:r] ** 2
    energies[numerical_rank:] = 0.0
    return PodBasis(modes=U[:, :r], energies=energies, numerical_rank=numerical_rank, clipped=clipped)


def sspor_place(
    basis: PodBasis,
    m: int,
    X: Optional[np.ndarray] = None,
    rng_seed: Optional[int] = None,
) -> Tuple[SensorSelection, int]:
    """
    Pivoted-QR placement on a POD basis.

    The first min(m, r) sensors are the QR pivots of V^T. Past the basis rank
    the pivoting continues on the residual of the mean-adjusted snapshots X
    when given; whatever is still missing is filled uniformly at random.

    Returns:
        (SensorSelection, n_filled) where n_filled counts the random fill
    """
    n_nodes = basis.modes.shape[0]
    _check_budget(m, n_nodes)
    picks = greedy_deflation(basis.modes, m)
    if len(picks) < m and X is not None:
        picks += greedy_deflation(np.asarray(X, dtype=float), m - len(picks), initial=picks)
    n_filled = m - len(picks)
    if n_filled:
        logger.warning(f"SSPOR basis exhausted after {len(picks)} pivots; {n_filled} sensors filled at random")
        picks += _fill(picks, n_nodes, n_filled, 0 if rng_seed is None else rng_seed)
    return SensorSelection(indices=picks), n_filled
