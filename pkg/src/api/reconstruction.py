"""
reconstruction.py - Reconstruction API

Guided reverse-diffusion reconstruction under a posted Gaussian-mixture prior,
and the exact Gaussian posterior for single-Gaussian priors.
"""

import logging

import numpy as np
from fastapi import APIRouter, HTTPException
from pydantic import ValidationError

from ..diffusion.sampler import dps_reconstruct, gaussian_posterior_oracle
from ..errors import OSPError
from ..models.api import DPSRequest, DPSResponse, OracleRequest, OracleResponse
from ..models.prior import GaussianMixturePrior
from ..models.sensing import SensorSelection
from .placement import domain_error

logger = logging.getLogger("api.reconstruction")

router = APIRouter(
    prefix="/api/reconstruction",
    tags=["reconstruction"],
    responses={400: {"description": "Invalid or degenerate input"}},
)


def _selection(indices) -> SensorSelection:
    try:
        return SensorSelection(indices=indices)
    except ValidationError as e:
        logger.error(f"Rejected sensor indices {indices}: {e}")
        raise HTTPException(status_code=400, detail=f"Invalid sensor indices: {e}")


@router.post("/dps", response_model=DPSResponse)
async def reconstruct_dps(request: DPSRequest):
    """
    Reconstruct a field from point measurements.

    - Validates the posted prior
    - Runs one guided reverse-diffusion chain from the given seed
    - Returns the estimate and its measurement residual
    """
    try:
        prior = GaussianMixturePrior.model_validate(request.prior.model_dump())
    except ValidationError as e:
        logger.error(f"Rejected prior: {e}")
        raise HTTPException(status_code=400, detail=f"Invalid prior: {e}")
    selection = _selection(request.indices)
    try:
        estimate = dps_reconstruct(prior, selection, request.y, request.seed, request.sampler)
    except OSPError as e:
        raise domain_error(e)
    residual = estimate[selection.as_array()] - np.asarray(request.y, dtype=float)
    return DPSResponse(estimate=estimate.tolist(), residual_norm=float(np.linalg.norm(residual)))


@router.post("/oracle", response_model=OracleResponse)
async def gaussian_oracle(request: OracleRequest):
    """Exact posterior mean and variance for a diagonal Gaussian prior"""
    selection = _selection(request.indices)
    if len(request.mean) != len(request.variance) or len(request.y) != selection.m:
        raise HTTPException(status_code=400, detail="mean/variance lengths or measurement count do not match")
    if selection.m and max(selection.indices) >= len(request.mean):
        raise HTTPException(status_code=400, detail="Sensor index out of range")
    try:
        mean, variance = gaussian_posterior_oracle(
            request.mean, request.variance, selection, request.y, request.sigma_eta
        )
    except OSPError as e:
        raise domain_error(e)
    return OracleResponse(mean=mean.tolist(), variance=variance.tolist())
