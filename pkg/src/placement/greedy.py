"""
greedy.py - Snapshot-driven sensor placement

Greedy Christoffel placement picks, m times, the node whose row of the
mean-adjusted snapshot matrix has the largest residual norm, then deflates
every row along it. The pick order is the pivot order of column-pivoted QR
on X^T. The i.i.d. and random strategies live here as well.
"""

import logging
from typing import Iterable, List, Optional, Tuple

import numpy as np

from ..christoffel.sampling import christoffel_sampling_measure, weighted_sample
from ..errors import InvalidRequestError
from ..models.experiment import IIDMode
from ..models.scores import ChristoffelScore
from ..models.sensing import SensorSelection, SnapshotSet

logger = logging.getLogger("placement.greedy")

# Residual norms below this fraction of the initial maximum count as exhausted
EXHAUSTION_RATIO = 1e-12


def mean_adjust(snapshots) -> Tuple[np.ndarray, np.ndarray]:
    """
    Subtract the snapshot mean from every column.

    Args:
        snapshots: SnapshotSet or an (N, M) matrix

    Returns:
        (X, mean) with X[:, n] = x^(n) - mean
    """
    data = snapshots.data if isinstance(snapshots, SnapshotSet) else np.asarray(snapshots, dtype=float)
    mean = data.mean(axis=1)
    return data - mean[:, None], mean


def _check_budget(m: int, n_nodes: int) -> None:
    if not 1 <= m <= n_nodes:
        raise InvalidRequestError(f"Sensor budget m={m} must lie in [1, {n_nodes}]")


def _fill(taken: List[int], n_nodes: int, count: int, rng_seed: Optional[int]) -> List[int]:
    """Pick `count` unselected nodes: lowest index first without a seed, uniformly with one."""
    mask = np.ones(n_nodes, dtype=bool)
    mask[taken] = False
    free = np.flatnonzero(mask)
    if rng_seed is None:
        return [int(i) for i in free[:count]]
    rng = np.random.default_rng(rng_seed)
    return [int(i) for i in rng.choice(free, size=count, replace=False)]


def greedy_deflation(
    rows: np.ndarray,
    m: int,
    initial: Iterable[int] = (),
) -> List[int]:
    """
    Largest-residual-row picks with Gram-Schmidt deflation.

    Rows listed in `initial` are deflated out first and are not returned.
    Stops early, returning fewer than m picks, once the residual is exhausted.

    Args:
        rows: (N, k) matrix whose rows compete
        m: Number of new picks wanted
        initial: Already-selected rows

    Returns:
        Picked row indices in order
    """
    residual = np.array(rows, dtype=float, copy=True)
    scale = float(np.einsum("ij,ij->i", residual, residual).max(initial=0.0))
    selected = np.zeros(residual.shape[0], dtype=bool)
    picks: List[int] = []

    def deflate(index: int) -> None:
        q = residual[index] / np.linalg.norm(residual[index])
        residual[:] -= np.outer(residual @ q, q)

    for index in initial:
        selected[index] = True
        if np.linalg.norm(residual[index]) > 0:
            deflate(index)

    while len(picks) < m:
        norms = np.einsum("ij,ij->i", residual, residual)
        norms[selected] = -np.inf
        best = int(np.argmax(norms))
        if scale <= 0 or norms[best] < EXHAUSTION_RATIO * scale:
            break
        picks.append(best)
        selected[best] = True
        deflate(best)
    return picks


def greedy_christoffel_place(X: np.ndarray, m: int, rng_seed: Optional[int] = None) -> SensorSelection:
    """
    Greedy Christoffel placement on mean-adjusted snapshots.

    Args:
        X: (N, M) mean-adjusted snapshot matrix
        m: Sensor budget
        rng_seed: Seed for the fill once the residual is exhausted;
            without one the lowest free indices are used

    Returns:
        SensorSelection in pick order
    """
    X = np.asarray(X, dtype=float)
    _check_budget(m, X.shape[0])
    picks = greedy_deflation(X, m)
    if len(picks) < m:
        logger.warning(
            f"Snapshot residual exhausted after {len(picks)} picks; filling {m - len(picks)} remaining"
        )
        picks += _fill(picks, X.shape[0], m - len(picks), rng_seed)
    return SensorSelection(indices=picks)


def iid_christoffel_place(
    score: ChristoffelScore,
    m: int,
    mode: IIDMode = IIDMode.MU_STAR,
    rng_seed: Optional[int] = None,
    replacement: bool = False,
) -> SensorSelection:
    """
    Draw sensors from the Christoffel sampling measure (mu_star) or
    proportional to the raw scores (raw).

    With replacement, duplicate draws are dropped in first-occurrence order,
    so fewer than m sensors may come back.
    """
    _check_budget(m, score.n_nodes)
    weights = christoffel_sampling_measure(score).probs if mode == IIDMode.MU_STAR else score.scores
    draws = weighted_sample(weights, m, replacement=replacement, rng_seed=rng_seed)
    indices = list(dict.fromkeys(draws))
    if len(indices) < m:
        logger.warning(f"{m - len(indices)} repeated draws dropped; returning {len(indices)} of {m} sensors")
    return SensorSelection(indices=indices)


def random_place(n_nodes: int, m: int, rng_seed: Optional[int] = None) -> SensorSelection:
    """Uniform placement without replacement."""
    _check_budget(m, n_nodes)
    rng = np.random.default_rng(rng_seed)
    return SensorSelection(indices=rng.choice(n_nodes, size=m, replace=False))
