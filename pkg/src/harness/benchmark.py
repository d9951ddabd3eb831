"""
benchmark.py - (strategy x m x seed) sweeps

Each cell draws a held-out ground truth, places sensors, measures with
per-node noise, reconstructs (fixed-sensor DPS for offline strategies, the
online ensemble for online ones) and records the relative L2 error. Cells run
on a joblib worker pool; everything a cell needs is derived from the config
and named seed streams, so the output does not depend on the worker count.
"""

import logging
import os
import time
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import ValidationError

from ..diffusion.online import run_online
from ..diffusion.sampler import dps_reconstruct
from ..errors import ConfigError, MissingFileError
from ..models.experiment import ExperimentConfig, PlacementRequest, PlacementStrategy, ResultRow
from ..models.online import OnlineConfig, OnlineTrace, ScoreMode
from ..models.sensing import SensorSelection
from ..placement.greedy import greedy_christoffel_place
from ..placement.registry import OED_STRATEGIES, PlacementContext, place
from ..sensing.measurement import measure_cached, node_noise, relative_l2
from .datasets import Dataset, build_dataset, draw_truth, stream_seed
from .reporting import summarize, write_json, write_rows_csv, write_summary_csv

logger = logging.getLogger("harness.benchmark")

SCORE_STRATEGIES = {
    PlacementStrategy.CHRISTOFFEL_IID,
    PlacementStrategy.CHRISTOFFEL_IID_RAW,
    PlacementStrategy.ONLINE_CHRISTOFFEL,
    PlacementStrategy.ONLINE_ENSEMBLE_STD,
}


def prepare_context(dataset: Dataset, config: ExperimentConfig) -> PlacementContext:
    """Build the placement context and compute what the sweep needs before dispatch."""
    context = PlacementContext(
        dataset.snapshots,
        pair_cap=config.pair_cap,
        score_seed=stream_seed(config.seed, "score"),
    )
    strategies = set(config.strategies)
    _ = context.X
    if strategies & SCORE_STRATEGIES:
        _ = context.score
    if PlacementStrategy.SSPOR in strategies:
        context.basis(config.pod_modes, clip_to_rank=True)
    if strategies & set(OED_STRATEGIES):
        context.basis(config.pod_modes, clip_to_rank=False)
    return context


def online_config_for(config: ExperimentConfig, strategy: PlacementStrategy, m: int) -> OnlineConfig:
    """Split the cell budget m into anchors and mobile sensors."""
    online = config.online_config()
    n_anchor = min(online.n_anchor, m)
    score_mode = ScoreMode.ENSEMBLE_STD if strategy == PlacementStrategy.ONLINE_ENSEMBLE_STD else ScoreMode.CHRISTOFFEL
    return online.model_copy(update={"n_anchor": n_anchor, "n_mobile": m - n_anchor, "score_mode": score_mode})


def execute_cell(
    dataset: Dataset,
    context: PlacementContext,
    config: ExperimentConfig,
    strategy: PlacementStrategy,
    m: int,
    seed_index: int,
    record: Optional[List[Dict[str, float]]] = None,
) -> Tuple[np.ndarray, np.ndarray, Dict[str, Any], Optional[OnlineTrace]]:
    """
    Run one cell.

    record, when given, receives the per-step residuals of a fixed-sensor run.

    Returns:
        (estimate, x_star, extra, online trace or None)
    """
    streams = {
        "snapshots": dataset.snapshot_seed,
        "truth": stream_seed(config.seed, "truth", seed_index),
        "sampler": stream_seed(config.seed, "sampler", seed_index),
    }
    x_star = draw_truth(dataset, streams["truth"])
    extra: Dict[str, Any] = {}
    trace = None

    if strategy.is_online:
        online = online_config_for(config, strategy, m)
        anchor_nodes = greedy_christoffel_place(context.X, online.n_anchor).indices if online.n_anchor else ()
        anchors = SensorSelection(indices=anchor_nodes, n_anchor=len(anchor_nodes))
        streams["online"] = stream_seed(config.seed, "online", seed_index, m)
        estimate, trace = run_online(
            dataset.prior, x_star, anchors, online, config.sampler, streams["online"],
            grid=dataset.grid, offline_score=context.score,
        )
        extra.update(
            n_events=len(trace.events),
            final_alive=len(trace.final_alive),
            radius_doublings=sum(r.doublings for e in trace.events for r in e.relocations),
            score_fallbacks=sum(e.score_fallback for e in trace.events),
        )
    else:
        streams["placement"] = stream_seed(config.seed, "placement", strategy.value, m, seed_index)
        streams["noise"] = stream_seed(config.seed, "noise", seed_index)
        request = PlacementRequest(
            strategy=strategy,
            m=m,
            rng_seed=streams["placement"],
            eps_reg=config.eps_reg,
            sigma_eta=config.sampler.sigma_eta,
            pod_modes=config.pod_modes,
        )
        result = place(request, context)
        noise = node_noise(dataset.snapshots.n_nodes, config.sampler.sigma_eta, streams["noise"])
        y = measure_cached(result.selection, x_star, noise)
        estimate = dps_reconstruct(
            dataset.prior, result.selection, y, streams["sampler"], config.sampler, record=record
        )
        extra.update(result.flags)
        extra["selection"] = list(result.selection.indices)

    extra["streams"] = streams
    return estimate, x_star, extra, trace


def run_cell(
    dataset: Dataset,
    context: PlacementContext,
    config: ExperimentConfig,
    strategy: PlacementStrategy,
    m: int,
    seed_index: int,
) -> ResultRow:
    """Run one cell and turn any failure into a failed row."""
    start = time.perf_counter()
    try:
        estimate, x_star, extra, trace = execute_cell(dataset, context, config, strategy, m, seed_index)
        if trace is not None and config.output.trace_dir:
            path = os.path.join(config.output.trace_dir, f"{strategy.value}_m{m}_s{seed_index}.json")
            write_json(trace, path)
            extra["trace_path"] = path
        return ResultRow(
            dataset=dataset.spec.name.value,
            strategy=strategy.value,
            m=m,
            seed=seed_index,
            rel_l2=relative_l2(estimate, x_star),
            wall_time_ms=1000.0 * (time.perf_counter() - start),
            extra=extra,
        )
    except Exception as e:
        logger.error(f"Cell {strategy.value} m={m} seed={seed_index} failed: {e}")
        return ResultRow(
            dataset=dataset.spec.name.value,
            strategy=strategy.value,
            m=m,
            seed=seed_index,
            status="failed",
            wall_time_ms=1000.0 * (time.perf_counter() - start),
            extra={"reason": f"{type(e).__name__}: {e}"},
        )


def run_benchmark(config: ExperimentConfig) -> Tuple[List[ResultRow], List[Dict[str, object]]]:
    """
    Run the full sweep and write the configured outputs.

    Args:
        config: Experiment configuration

    Returns:
        (rows sorted by dataset, strategy, m, seed; summary entries)
    """
    dataset = build_dataset(config.dataset)
    context = prepare_context(dataset, config)
    cells = [
        (strategy, m, seed_index)
        for strategy in config.strategies
        for m in config.m_values
        for seed_index in range(config.n_seeds)
    ]
    n_jobs = config.n_jobs
    logger.info(f"Running {len(cells)} cells on {config.dataset.name.value} with n_jobs={n_jobs}")

    rows = Parallel(n_jobs=n_jobs)(
        delayed(run_cell)(dataset, context, config, strategy, m, seed_index)
        for strategy, m, seed_index in cells
    )
    rows = sorted(rows, key=ResultRow.sort_key)
    failed = sum(row.status != "ok" for row in rows)
    if failed:
        logger.warning(f"{failed} of {len(rows)} cells failed")

    summary = summarize(rows)
    if config.output.rows_csv:
        write_rows_csv(rows, config.output.rows_csv)
    if config.output.summary_csv:
        write_summary_csv(summary, config.output.summary_csv)
    return rows, summary


def load_experiment_config(path: str) -> ExperimentConfig:
    """
    Read and validate an experiment config JSON file.

    Raises:
        MissingFileError: path does not exist
        ConfigError: the file is not valid JSON or fails validation
    """
    if not os.path.isfile(path):
        raise MissingFileError(f"No such config file: {path}")
    try:
        with open(path) as f:
            return ExperimentConfig.model_validate_json(f.read())
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment config {path}: {e}")


def save_experiment_config(config: ExperimentConfig, path: str) -> None:
    write_json(config, path)
