"""
placement.py - Sensor placement API

Endpoints for scoring snapshot sets and running offline placement strategies
on snapshots sent in the request body.
"""

import logging

import numpy as np
from fastapi import APIRouter, HTTPException
from pydantic import ValidationError

from ..christoffel.sampling import christoffel_sampling_measure
from ..christoffel.scores import empirical_christoffel
from ..errors import OSPError
from ..models.api import PlaceRequest, PlaceResponse, ScoreRequest, ScoreResponse, SnapshotPayload
from ..models.experiment import PlacementRequest
from ..models.sensing import Grid, SnapshotSet
from ..placement.registry import PlacementContext, place
from ..sensing.measurement import grid_1d

logger = logging.getLogger("api.placement")

router = APIRouter(
    prefix="/api/placement",
    tags=["placement"],
    responses={400: {"description": "Invalid or degenerate input"}},
)


def snapshot_set(payload: SnapshotPayload) -> SnapshotSet:
    """Build a SnapshotSet from an inline payload, raising 400 on bad shapes."""
    try:
        data = np.asarray(payload.data, dtype=float)
        grid = Grid(coords=payload.coords) if payload.coords is not None else grid_1d(data.shape[0])
        return SnapshotSet(grid=grid, data=data)
    except (ValueError, ValidationError) as e:
        logger.error(f"Rejected snapshot payload: {e}")
        raise HTTPException(status_code=400, detail=f"Invalid snapshots: {e}")


def domain_error(e: OSPError) -> HTTPException:
    logger.error(f"{type(e).__name__}: {e}")
    return HTTPException(status_code=400, detail=e.to_payload())


@router.post("/score", response_model=ScoreResponse)
async def score_snapshots(request: ScoreRequest):
    """
    Empirical Christoffel score of the posted snapshots.

    Also returns the Christoffel sampling measure derived from it.
    """
    snapshots = snapshot_set(request.snapshots)
    try:
        score = empirical_christoffel(snapshots, request.pair_cap, request.rng_seed)
        measure = christoffel_sampling_measure(score)
    except OSPError as e:
        raise domain_error(e)
    return ScoreResponse(
        scores=score.scores.tolist(),
        sampling_measure=measure.probs.tolist(),
        n_pairs_used=score.n_pairs_used,
        n_zero_skipped=score.n_zero_skipped,
        exact=score.exact,
    )


@router.post("/place", response_model=PlaceResponse)
async def place_sensors(request: PlaceRequest):
    """Run one offline placement strategy on the posted snapshots"""
    snapshots = snapshot_set(request.snapshots)
    try:
        result = place(
            PlacementRequest(
                strategy=request.strategy,
                m=request.m,
                rng_seed=request.rng_seed,
                eps_reg=request.eps_reg,
                pod_modes=request.pod_modes,
            ),
            PlacementContext(snapshots, pair_cap=request.pair_cap, score_seed=request.rng_seed),
        )
    except OSPError as e:
        raise domain_error(e)
    return PlaceResponse(strategy=request.strategy, indices=list(result.selection.indices), flags=result.flags)
