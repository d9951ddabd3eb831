#!/usr/bin/env python3
"""
simulate_pipeline.py - Walk one field through the whole sensing pipeline

This script generates a bump-manifold dataset, scores it, places sensors with
a few strategies, measures a held-out field and reconstructs it with guided
diffusion. With --api-url the score, placement and reconstruction calls go to
a running service instead of the in-process functions. Useful for demos and
smoke tests.
"""

import argparse
import logging
import os
import sys

import httpx
import numpy as np

# Add parent directory to path to allow importing modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.christoffel.scores import empirical_christoffel
from src.diffusion.sampler import dps_reconstruct
from src.harness.datasets import build_dataset, draw_truth, stream_seed
from src.models.experiment import DatasetSpec, PlacementRequest, PlacementStrategy
from src.models.sampler import SamplerConfig
from src.models.sensing import SensorSelection
from src.placement.registry import PlacementContext, place
from src.sensing.measurement import measure, relative_l2

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger("pipeline_simulator")

STRATEGIES = [PlacementStrategy.RANDOM, PlacementStrategy.CHRISTOFFEL_GREEDY, PlacementStrategy.SSPOR]


def remote_pipeline(api_url, dataset, x_star, m, sampler, seed):
    """Run score, placement and reconstruction through the HTTP service."""
    snapshots = {"data": dataset.snapshots.data.tolist(), "coords": dataset.grid.coords.tolist()}
    prior = dataset.prior.model_dump(mode="json")
    with httpx.Client(base_url=api_url, timeout=120.0) as client:
        response = client.post("/api/placement/score", json={"snapshots": snapshots})
        response.raise_for_status()
        logger.info(f"Remote score: {response.json()['n_pairs_used']} pairs used")
        for strategy in STRATEGIES:
            response = client.post("/api/placement/place", json={
                "snapshots": snapshots, "strategy": strategy.value, "m": m, "rng_seed": seed,
            })
            response.raise_for_status()
            indices = response.json()["indices"]
            y = measure(SensorSelection(indices=indices), x_star, sampler.sigma_eta, stream_seed(seed, "noise"))
            response = client.post("/api/reconstruction/dps", json={
                "prior": prior, "indices": indices, "y": y.tolist(), "seed": seed, "sampler": sampler.model_dump(mode="json"),
            })
            response.raise_for_status()
            estimate = np.asarray(response.json()["estimate"])
            logger.info(f"{strategy.value:>20}: sensors {indices}, rel L2 {relative_l2(estimate, x_star):.4f}")


def local_pipeline(dataset, x_star, m, sampler, seed):
    """Run score, placement and reconstruction in-process."""
    score = empirical_christoffel(dataset.snapshots, rng_seed=seed)
    logger.info(f"Christoffel score: {score.n_pairs_used} pairs, max {score.scores.max():.3f}")
    context = PlacementContext(dataset.snapshots, score=score)
    for strategy in STRATEGIES:
        result = place(PlacementRequest(strategy=strategy, m=m, rng_seed=seed), context)
        y = measure(result.selection, x_star, sampler.sigma_eta, stream_seed(seed, "noise"))
        estimate = dps_reconstruct(dataset.prior, result.selection, y, stream_seed(seed, "sampler"), sampler)
        logger.info(
            f"{strategy.value:>20}: sensors {list(result.selection.indices)}, "
            f"rel L2 {relative_l2(estimate, x_star):.4f}"
        )


def main():
    parser = argparse.ArgumentParser(description="Simulate the placement and reconstruction pipeline")
    parser.add_argument("--n-nodes", type=int, default=64)
    parser.add_argument("--n-snapshots", type=int, default=100)
    parser.add_argument("--m", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--api-url", default=None, help="Base URL of a running service, e.g. http://localhost:8000")
    args = parser.parse_args()

    logger.info("Starting pipeline simulation")
    dataset = build_dataset(DatasetSpec(n_nodes=args.n_nodes, n_snapshots=args.n_snapshots, seed=args.seed))
    x_star = draw_truth(dataset, stream_seed(args.seed, "truth"))
    sampler = SamplerConfig(n_steps=30)

    if args.api_url:
        remote_pipeline(args.api_url, dataset, x_star, args.m, sampler, args.seed)
    else:
        local_pipeline(dataset, x_star, args.m, sampler, args.seed)
    logger.info("Pipeline simulation complete!")


if __name__ == "__main__":
    main()
