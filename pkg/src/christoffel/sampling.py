"""
sampling.py - Christoffel sampling measure and weighted index draws
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DegenerateScoreError, InvalidRequestError
from ..models.scores import ChristoffelScore, SamplingMeasure

logger = logging.getLogger("christoffel.sampling")


def christoffel_sampling_measure(score: Union[ChristoffelScore, Sequence[float]]) -> SamplingMeasure:
    """
    Mix the Christoffel density with the uniform measure.

    With rho_j = 1/N and C = (1/N) sum_j K(j):
        mu*(j) = (K(j) / (2C) + 1/2) / N

    so the density ratio against uniform never exceeds 2.

    Raises:
        DegenerateScoreError: all scores are zero
    """
    scores = score.scores if isinstance(score, ChristoffelScore) else np.asarray(score, dtype=float)
    if scores.ndim != 1 or scores.size == 0 or np.any(scores < 0) or not np.all(np.isfinite(scores)):
        raise InvalidRequestError("Scores must be a non-empty, finite, non-negative vector")
    n_nodes = scores.shape[0]
    c_constant = float(scores.sum() / n_nodes)
    if c_constant <= 0:
        raise DegenerateScoreError("Cannot build a sampling measure from all-zero scores")
    probs = (scores / (2.0 * c_constant) + 0.5) / n_nodes
    probs /= probs.sum()
    return SamplingMeasure(probs=probs, c_constant=c_constant)


def _check_weights(weights) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.size == 0:
        raise InvalidRequestError("weights must be a non-empty vector")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise InvalidRequestError("weights must be finite and non-negative")
    return weights


def weighted_sample(
    weights,
    m: int,
    replacement: bool = False,
    rng_seed: Optional[int] = None,
) -> List[int]:
    """
    Draw m node indices proportional to weights.

    Without replacement the draws are sequential, each drawn index removed
    from the pool; once the positive-weight support is exhausted the rest
    are drawn uniformly from the remaining zero-weight nodes. All-zero
    weights give uniform sampling.

    Args:
        weights: Non-negative length-N weights
        m: Number of draws
        replacement: i.i.d. draws when True
        rng_seed: Seed for the generator

    Returns:
        List of m indices in draw order
    """
    weights = _check_weights(weights)
    n_nodes = weights.shape[0]
    if m < 0:
        raise InvalidRequestError(f"m must be non-negative, got {m}")
    if not replacement and m > n_nodes:
        raise InvalidRequestError(f"Cannot draw {m} distinct nodes out of {n_nodes}")

    rng = np.random.default_rng(rng_seed)
    total = weights.sum()
    if total <= 0:
        logger.warning("All sampling weights are zero, drawing uniformly")
        weights = np.ones(n_nodes)
        total = float(n_nodes)

    if replacement:
        return [int(i) for i in rng.choice(n_nodes, size=m, replace=True, p=weights / total)]

    pool = weights.copy()
    taken = np.zeros(n_nodes, dtype=bool)
    picks: List[int] = []
    for _ in range(m):
        mass = pool.sum()
        if mass > 0:
            index = int(rng.choice(n_nodes, p=pool / mass))
        else:
            free = np.flatnonzero(~taken)
            index = int(free[rng.integers(free.shape[0])])
        picks.append(index)
        taken[index] = True
        pool[index] = 0.0
    if np.count_nonzero(weights) < m:
        logger.warning(f"Positive-weight support smaller than m={m}, filled uniformly")
    return picks


def draw_from_candidates(weights, candidates: Sequence[int], rng: np.random.Generator) -> Tuple[int, bool]:
    """
    Draw one node from candidates proportional to weights.

    Returns:
        (node, fallback) where fallback is True when every candidate had
        zero weight and the draw was uniform
    """
    candidates = np.asarray(candidates, dtype=np.intp)
    if candidates.size == 0:
        raise InvalidRequestError("No candidate nodes to draw from")
    local = np.asarray(weights, dtype=float)[candidates]
    mass = local.sum()
    if mass > 0:
        return int(candidates[rng.choice(candidates.shape[0], p=local / mass)]), False
    return int(candidates[rng.integers(candidates.shape[0])]), True
