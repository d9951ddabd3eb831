"""
scores.py - Empirical Christoffel scores

The Christoffel score of node j is the largest squared coordinate j over a set
of unit-norm secants (x - x') / ||x - x'||. Offline, the secants come from
snapshot pairs; online, from the live ensemble's Tweedie estimates.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..config import get_settings
from ..errors import DegenerateDataError, DegenerateEnsembleError, InvalidRequestError
from ..models.scores import ChristoffelScore
from ..models.sensing import SnapshotSet

logger = logging.getLogger("christoffel.scores")

# Secants evaluated per vectorized block
PAIR_CHUNK = 4096


def _pairs_from_linear(linear: np.ndarray, n_items: int) -> Tuple[np.ndarray, np.ndarray]:
    """Map linear indices over the upper triangle (row-major, i < j) to (i, j)."""
    # Row i starts at offset i*n - i*(i+1)/2
    n = n_items
    i = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * linear.astype(float))) / 2).astype(np.int64)
    start = i * n - i * (i + 1) // 2
    # Guard against floating-point rounding at row boundaries
    too_far = linear < start
    i[too_far] -= 1
    start = i * n - i * (i + 1) // 2
    row_len = n - 1 - i
    overflow = linear - start >= row_len
    i[overflow] += 1
    start = i * n - i * (i + 1) // 2
    j = linear - start + i + 1
    return i, j


def _secant_max(columns: np.ndarray, first: np.ndarray, second: np.ndarray) -> Tuple[np.ndarray, int, int]:
    """
    Max over the given column pairs of the squared normalized secant coordinates.

    Returns:
        (scores, n_used, n_zero_skipped)
    """
    n_nodes = columns.shape[0]
    scores = np.zeros(n_nodes)
    n_zero = 0
    for start in range(0, first.shape[0], PAIR_CHUNK):
        a = first[start:start + PAIR_CHUNK]
        b = second[start:start + PAIR_CHUNK]
        secants = columns[:, a] - columns[:, b]
        norms2 = np.einsum("ij,ij->j", secants, secants)
        valid = norms2 > 0
        n_zero += int(np.count_nonzero(~valid))
        if not np.any(valid):
            continue
        ratios = secants[:, valid] ** 2 / norms2[valid]
        np.maximum(scores, ratios.max(axis=1), out=scores)
    np.minimum(scores, 1.0, out=scores)
    return scores, int(first.shape[0]) - n_zero, n_zero


def empirical_christoffel(
    snapshots: SnapshotSet,
    pair_cap: Optional[int] = None,
    rng_seed: Optional[int] = None,
) -> ChristoffelScore:
    """
    Offline Christoffel score from snapshot secants.

    Every unordered pair is evaluated when M(M-1)/2 <= pair_cap; otherwise
    pair_cap pairs are drawn uniformly without replacement, before any
    evaluation, from the seeded generator.

    Args:
        snapshots: Snapshot set with M >= 2
        pair_cap: Maximum number of pairs, defaults to OSP_PAIR_CAP
        rng_seed: Seed for the pair subsample

    Returns:
        ChristoffelScore with per-node maxima

    Raises:
        DegenerateDataError: every secant has zero norm
    """
    pair_cap = get_settings().pair_cap if pair_cap is None else pair_cap
    n_snapshots = snapshots.n_snapshots
    if n_snapshots < 2:
        raise InvalidRequestError(f"Christoffel scores need at least 2 snapshots, got {n_snapshots}")
    if pair_cap < 1:
        raise InvalidRequestError(f"pair_cap must be at least 1, got {pair_cap}")

    total = n_snapshots * (n_snapshots - 1) // 2
    exact = total <= pair_cap
    if exact:
        first, second = np.triu_indices(n_snapshots, k=1)
    else:
        rng = np.random.default_rng(rng_seed)
        linear = np.sort(rng.choice(total, size=pair_cap, replace=False))
        first, second = _pairs_from_linear(linear, n_snapshots)
        logger.info(f"Subsampled {pair_cap} of {total} snapshot pairs")

    scores, n_used, n_zero = _secant_max(snapshots.data, first, second)
    if n_used == 0:
        raise DegenerateDataError("All snapshot secants have zero norm (identical snapshots)")
    if n_zero:
        logger.info(f"Skipped {n_zero} zero-norm secants")
    return ChristoffelScore(scores=scores, n_pairs_used=n_used, n_zero_skipped=n_zero, exact=exact)


def _as_ensemble(estimates) -> np.ndarray:
    ensemble = np.asarray(estimates, dtype=float)
    if ensemble.ndim != 2 or ensemble.shape[0] < 2:
        raise InvalidRequestError("Ensemble scores need at least 2 estimates of equal length")
    return ensemble


def ensemble_christoffel(estimates) -> ChristoffelScore:
    """
    Online Christoffel score over all pairs of ensemble estimates.

    Args:
        estimates: (K, N) array of Tweedie estimates, K >= 2

    Raises:
        DegenerateEnsembleError: every pair of estimates coincides
    """
    ensemble = _as_ensemble(estimates)
    first, second = np.triu_indices(ensemble.shape[0], k=1)
    scores, n_used, n_zero = _secant_max(ensemble.T, first, second)
    if n_used == 0:
        raise DegenerateEnsembleError("All ensemble estimates coincide")
    return ChristoffelScore(scores=scores, n_pairs_used=n_used, n_zero_skipped=n_zero, exact=True)


def ensemble_std_score(estimates) -> np.ndarray:
    """Per-node sample standard deviation across the ensemble (divisor K - 1)."""
    return np.std(_as_ensemble(estimates), axis=0, ddof=1)


def snapshot_std_score(snapshots: SnapshotSet) -> np.ndarray:
    """Per-node sample standard deviation across snapshots."""
    return ensemble_std_score(snapshots.data.T)
