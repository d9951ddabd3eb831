"""
online.py - Online ensemble Christoffel-DPS

An ensemble of guided reverse-diffusion chains shares one set of sensors:
anchors that never move and mobile sensors that are relocated at scheduled
drift events. At each event the ensemble's Tweedie estimates are scored,
every mobile sensor is redrawn near its current node proportionally to the
score, measurements are refreshed and chains whose misfit falls too far
behind the best one are pruned. After the last step the survivors collapse
into a single reconstruction.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..christoffel.sampling import christoffel_sampling_measure, draw_from_candidates, weighted_sample
from ..christoffel.scores import ensemble_christoffel, ensemble_std_score
from ..errors import DegenerateEnsembleError, InvalidRequestError
from ..models.online import (
    CollapseMode,
    DriftEventRecord,
    EnsembleState,
    OnlineConfig,
    OnlineTrace,
    Relocation,
    RelocationMeasure,
    ScoreMode,
)
from ..models.prior import GaussianMixturePrior
from ..models.sampler import ChainState, SamplerConfig, SigmaSchedule
from ..models.scores import ChristoffelScore
from ..models.sensing import Grid, SensorSelection
from ..seeding import derive_seed
from ..sensing.measurement import bounding_diagonal, grid_1d, measure_cached, node_noise
from .gmm import denoise, measurement_log_likelihood
from .sampler import MeasurementGuidance, advance, chain_seed, initial_state, schedule_for

logger = logging.getLogger("diffusion.online")

# Fraction of the bounding-box diagonal used when r_drift is not configured
DEFAULT_RADIUS_FRACTION = 0.25
# Distances within this relative margin of the radius count as inside
RADIUS_SLACK = 1e-12


def default_drift_levels(schedule: SigmaSchedule, n_events: int, sigma_eta: float) -> List[int]:
    """
    Schedule indices of log-spaced noise levels between sigma_max / 10 and 2 sigma_eta.

    Each target level is mapped to the nearest schedule level in log scale,
    then shifted so the indices are strictly increasing and lie in
    [1, n_steps - 1].
    """
    if n_events == 0:
        return []
    last = schedule.n_steps - 1
    if n_events > last:
        raise InvalidRequestError(f"{n_events} drift events do not fit in {schedule.n_steps} steps")
    upper, lower = schedule.sigma_max / 10.0, 2.0 * sigma_eta
    targets = sorted(np.geomspace(upper, lower, n_events), reverse=True)
    log_levels = np.log(schedule.sigmas[1:last + 1])

    levels: List[int] = []
    for target in targets:
        index = 1 + int(np.argmin(np.abs(log_levels - np.log(target))))
        levels.append(max(index, levels[-1] + 1) if levels else index)
    for position in range(n_events - 1, -1, -1):
        levels[position] = min(levels[position], last - (n_events - 1 - position))
    return levels


def prune_alive(
    alive: Sequence[int],
    log_likes: np.ndarray,
    delta_ell: Optional[float],
    m: int,
    n_min: int,
) -> List[int]:
    """
    Likelihood-gap pruning with a floor.

    Chain i survives when l* - l_i <= delta_ell * m. If fewer than n_min
    survive, the n_min chains with the largest l are kept (ties to the lower
    chain index). delta_ell None or inf disables pruning.

    Returns:
        Sorted list of surviving chain indices, a subset of alive
    """
    alive = sorted(int(i) for i in alive)
    if delta_ell is None or np.isinf(delta_ell) or len(alive) <= 1:
        return alive
    best = max(log_likes[i] for i in alive)
    threshold = delta_ell * m
    survivors = [i for i in alive if best - log_likes[i] <= threshold]
    if len(survivors) < n_min:
        ranked = sorted(alive, key=lambda i: (-log_likes[i], i))
        survivors = sorted(ranked[:n_min])
    return survivors


def prune(ensemble: EnsembleState, delta_ell: Optional[float], n_min: int) -> List[int]:
    """Apply prune_alive to an ensemble with |S| = current sensor count."""
    return prune_alive(ensemble.alive, ensemble.log_likes, delta_ell, ensemble.selection.m, n_min)


def collapse(ensemble: EnsembleState, mode: CollapseMode = CollapseMode.BEST_LIKELIHOOD) -> np.ndarray:
    """
    Reduce the alive ensemble to one field.

    best_likelihood returns the estimate of the argmax-l chain (lowest index
    on ties); mean_survivors averages the alive estimates.
    """
    if not ensemble.alive:
        raise InvalidRequestError("Cannot collapse an empty ensemble")
    alive = sorted(ensemble.alive)
    if CollapseMode(mode) == CollapseMode.MEAN_SURVIVORS:
        return ensemble.estimates[alive].mean(axis=0)
    log_likes = ensemble.log_likes
    best = min(alive, key=lambda i: (-log_likes[i], i))
    return ensemble.estimates[best].copy()


def _distances(grid: Grid, node: int) -> np.ndarray:
    return np.linalg.norm(grid.coords - grid.coords[node], axis=1)


def drift_event(
    ensemble: EnsembleState,
    score: np.ndarray,
    r_drift: float,
    grid: Grid,
    rng_seed: Optional[int] = None,
) -> Tuple[SensorSelection, List[Relocation]]:
    """
    Relocate every mobile sensor once.

    Sensors move in order. Sensor l draws proportionally to score among
    nodes within r_drift of its current node, excluding anchors, the new
    nodes of sensors already moved and the current nodes of sensors not yet
    moved; staying put is allowed. If no other node is available the radius
    is doubled (recorded) until it covers the grid.

    Args:
        ensemble: Current ensemble (its selection is relocated)
        score: Length-N non-negative relocation weights
        r_drift: Relocation radius in grid units
        grid: Node coordinates
        rng_seed: Seed of the relocation draws

    Returns:
        (new selection, per-sensor relocation records)
    """
    if not r_drift > 0:
        raise InvalidRequestError(f"r_drift must be positive, got {r_drift}")
    selection = ensemble.selection
    weights = np.asarray(score, dtype=float)
    if weights.shape != (grid.n_nodes,):
        raise InvalidRequestError(f"Score has shape {weights.shape}, grid has {grid.n_nodes} nodes")
    rng = np.random.default_rng(rng_seed)
    diagonal = bounding_diagonal(grid)
    anchors = list(selection.anchors)
    mobile = list(selection.mobile)
    moved: List[int] = []
    relocations: List[Relocation] = []

    for position, old_node in enumerate(mobile):
        blocked = np.zeros(grid.n_nodes, dtype=bool)
        blocked[anchors + moved + mobile[position + 1:]] = True
        distances = _distances(grid, old_node)
        radius, doublings = float(r_drift), 0
        while True:
            inside = (distances <= radius * (1 + RADIUS_SLACK)) & ~blocked
            candidates = np.flatnonzero(inside)
            if np.any(candidates != old_node) or radius >= diagonal:
                break
            radius *= 2.0
            doublings += 1
        if doublings:
            logger.warning(f"Sensor {selection.n_anchor + position} boxed in at node {old_node}; radius doubled {doublings}x")
        new_node, _ = draw_from_candidates(weights, candidates, rng)
        moved.append(new_node)
        relocations.append(Relocation(
            sensor=selection.n_anchor + position,
            old_node=old_node,
            new_node=new_node,
            radius=radius,
            doublings=doublings,
            displacement=float(distances[new_node]),
        ))
    return SensorSelection(indices=anchors + moved, n_anchor=selection.n_anchor), relocations


def _draw_free(weights, free: np.ndarray, count: int, rng_seed: int) -> List[int]:
    """Weighted draws without replacement restricted to free nodes."""
    nodes = np.flatnonzero(free)
    if count > nodes.shape[0]:
        raise InvalidRequestError(f"Only {nodes.shape[0]} free nodes for {count} sensors")
    local = weighted_sample(np.asarray(weights, dtype=float)[nodes], count, rng_seed=rng_seed)
    return [int(nodes[k]) for k in local]


def _add_sensors(
    selection: SensorSelection,
    weights: np.ndarray,
    count: int,
    grid: Grid,
    rng_seed: int,
) -> Tuple[SensorSelection, List[Relocation]]:
    """Incremental mode: introduce `count` new mobile sensors anywhere free."""
    free = np.ones(grid.n_nodes, dtype=bool)
    free[list(selection.indices)] = False
    draws = _draw_free(weights, free, count, rng_seed)
    diagonal = bounding_diagonal(grid)
    start = selection.m
    relocations = [
        Relocation(sensor=start + k, old_node=node, new_node=node, radius=diagonal, displacement=0.0, added=True)
        for k, node in enumerate(draws)
    ]
    return SensorSelection(indices=list(selection.indices) + draws, n_anchor=selection.n_anchor), relocations


def _event_scores(estimates: np.ndarray, mode: ScoreMode) -> Tuple[np.ndarray, bool]:
    """Score the alive estimates; returns (scores, degenerate)."""
    n_nodes = estimates.shape[1]
    if estimates.shape[0] < 2:
        return np.zeros(n_nodes), True
    if mode == ScoreMode.ENSEMBLE_STD:
        scores = ensemble_std_score(estimates)
        return scores, not scores.sum() > 0
    try:
        return ensemble_christoffel(estimates).scores, False
    except DegenerateEnsembleError:
        return np.zeros(n_nodes), True


def _relocation_weights(scores: np.ndarray, measure: RelocationMeasure) -> np.ndarray:
    if measure == RelocationMeasure.MU_STAR and scores.sum() > 0:
        return christoffel_sampling_measure(scores).probs
    return scores


def _initial_mobile(
    n_nodes: int,
    anchors: SensorSelection,
    count: int,
    offline_score: Optional[ChristoffelScore],
    rng_seed: int,
) -> List[int]:
    if count == 0:
        return []
    weights = christoffel_sampling_measure(offline_score).probs if offline_score is not None else np.ones(n_nodes)
    free = np.ones(n_nodes, dtype=bool)
    free[list(anchors.indices)] = False
    return _draw_free(weights, free, count, rng_seed)


def _log_likes(estimates: np.ndarray, alive: Sequence[int], selection, y, sigma_eta: float) -> np.ndarray:
    log_likes = np.full(estimates.shape[0], -np.inf)
    for i in alive:
        log_likes[i] = measurement_log_likelihood(estimates[i], selection, y, sigma_eta)
    return log_likes


def _set_log_likes(ensemble: EnsembleState, log_likes: np.ndarray) -> None:
    for i in ensemble.alive:
        ensemble.chains[i].log_like = float(log_likes[i])


def _trace_log_likes(ensemble: EnsembleState) -> List[Optional[float]]:
    alive = set(ensemble.alive)
    return [chain.log_like if i in alive else None for i, chain in enumerate(ensemble.chains)]


def run_online(
    prior: GaussianMixturePrior,
    x_star: np.ndarray,
    anchors: SensorSelection,
    config: OnlineConfig,
    sampler_config: SamplerConfig,
    rng_seed: int = 0,
    grid: Optional[Grid] = None,
    offline_score: Optional[ChristoffelScore] = None,
) -> Tuple[np.ndarray, OnlineTrace]:
    """
    Online ensemble reconstruction with drifting sensors.

    Args:
        prior: Gaussian-mixture denoiser
        x_star: Ground-truth field the sensors read
        anchors: The n_anchor fixed sensors
        config: Ensemble, drift, pruning and collapse settings
        sampler_config: Reverse-diffusion settings
        rng_seed: Base seed; chains, noise, placement and drift draws use derived streams
        grid: Node coordinates, the unit interval when omitted
        offline_score: Christoffel score for the initial mobile placement,
            uniform placement when omitted

    Returns:
        (reconstruction, trace)
    """
    x_star = np.asarray(x_star, dtype=float)
    n_nodes = prior.n_nodes
    grid = grid or grid_1d(n_nodes)
    if x_star.shape != (n_nodes,) or grid.n_nodes != n_nodes:
        raise InvalidRequestError(f"x_star {x_star.shape} and grid ({grid.n_nodes}) must match the prior ({n_nodes})")
    if anchors.m != config.n_anchor:
        raise InvalidRequestError(f"Expected {config.n_anchor} anchors, got {anchors.m}")
    if config.m > n_nodes:
        raise InvalidRequestError(f"{config.m} sensors do not fit on {n_nodes} nodes")
    anchors = SensorSelection(indices=anchors.indices, n_anchor=anchors.m)

    schedule = schedule_for(sampler_config, prior)
    levels = list(config.drift_levels) if config.drift_levels is not None else default_drift_levels(
        schedule, config.n_drift_events, sampler_config.sigma_eta
    )
    if levels and levels[-1] >= schedule.n_steps:
        raise InvalidRequestError(f"Drift levels must be below {schedule.n_steps}")
    r_drift = config.r_drift if config.r_drift is not None else DEFAULT_RADIUS_FRACTION * bounding_diagonal(grid)
    sigma_noise = sampler_config.sigma_eta if config.sigma_noise is None else config.sigma_noise
    sigma_eta = sampler_config.sigma_eta

    n_events = len(levels)
    per_event = config.n_mobile // n_events if config.incremental and n_events else 0
    n_initial = config.n_mobile - per_event * n_events

    noise_seed = derive_seed(rng_seed, "noise")
    noise = node_noise(n_nodes, sigma_noise, noise_seed)
    mobile = _initial_mobile(n_nodes, anchors, n_initial, offline_score, derive_seed(rng_seed, "placement"))
    selection = SensorSelection(indices=list(anchors.indices) + mobile, n_anchor=anchors.m)
    y = measure_cached(selection, x_star, noise)

    seeds = [chain_seed(rng_seed, i) for i in range(config.n_ensemble)]
    ensemble = EnsembleState(
        chains=[initial_state(n_nodes, schedule.sigma_max, seed) for seed in seeds],
        alive=list(range(config.n_ensemble)),
        selection=selection,
        y=y,
        estimates=np.zeros((config.n_ensemble, n_nodes)),
    )
    trace = OnlineTrace(
        noise_seed=noise_seed,
        sigma_noise=sigma_noise,
        chain_seeds=seeds,
        r_drift=r_drift,
        drift_levels=levels,
        initial_selection=list(selection.indices),
        n_anchor=selection.n_anchor,
        initial_y=y.tolist(),
        collapse_mode=config.collapse_mode,
    )
    logger.info(
        f"Online run: {config.n_ensemble} chains, {n_events} drift events at {levels}, "
        f"m0={config.n_anchor}, m1={config.n_mobile}, r_drift={r_drift:.3g}"
    )

    event_index = {level: e for e, level in enumerate(levels)}
    for _ in range(schedule.n_steps):
        guidance = MeasurementGuidance(selection=ensemble.selection, y=ensemble.y, sigma_eta=sigma_eta)
        for i in ensemble.alive:
            ensemble.chains[i] = advance(prior, ensemble.chains[i], schedule, sampler_config, guidance, seeds[i])
        step = ensemble.chains[ensemble.alive[0]].sigma_index
        if step not in event_index:
            continue

        event = event_index[step]
        sigma = float(schedule.sigmas[step])
        for i in ensemble.alive:
            ensemble.estimates[i] = denoise(prior, ensemble.chains[i].z, sigma)
        scores, degenerate = _event_scores(ensemble.estimates[ensemble.alive], config.score_mode)
        if degenerate:
            logger.warning(f"Drift event {event}: degenerate ensemble score, relocating uniformly")
        weights = _relocation_weights(scores, config.relocation_measure)
        drift_seed = derive_seed(rng_seed, "drift", event)
        if config.incremental:
            new_selection, relocations = _add_sensors(ensemble.selection, weights, per_event, grid, drift_seed)
        else:
            new_selection, relocations = drift_event(ensemble, weights, r_drift, grid, drift_seed)

        ensemble.selection = new_selection
        ensemble.y = measure_cached(new_selection, x_star, noise)
        log_likes = _log_likes(ensemble.estimates, ensemble.alive, new_selection, ensemble.y, sigma_eta)
        _set_log_likes(ensemble, log_likes)
        before = len(ensemble.alive)
        ensemble.alive = prune(ensemble, config.prune_gap, config.n_min)
        logger.info(
            f"Drift event {event} at sigma={sigma:.4g}: sensors {list(new_selection.indices)}, "
            f"alive {before} -> {len(ensemble.alive)}"
        )
        trace.events.append(DriftEventRecord(
            step=step,
            sigma=sigma,
            selection=list(new_selection.indices),
            n_anchor=new_selection.n_anchor,
            y=ensemble.y.tolist(),
            alive=list(ensemble.alive),
            log_likes=_trace_log_likes(ensemble),
            relocations=relocations,
            scores=scores.tolist() if config.record_scores else None,
            score_fallback=degenerate,
        ))

    for i in ensemble.alive:
        ensemble.estimates[i] = ensemble.chains[i].z
    _set_log_likes(ensemble, _log_likes(ensemble.estimates, ensemble.alive, ensemble.selection, ensemble.y, sigma_eta))
    trace.final_alive = list(ensemble.alive)
    trace.final_log_likes = _trace_log_likes(ensemble)
    return collapse(ensemble, config.collapse_mode), trace
