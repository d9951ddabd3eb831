"""
HTTP request and response models for the placement and reconstruction service
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from .experiment import PlacementStrategy
from .sampler import SamplerConfig


class SnapshotPayload(BaseModel):
    """Snapshot matrix sent inline: one inner list per node"""
    data: List[List[float]] = Field(..., description="N x M snapshot values, row j is node j")
    coords: Optional[List[List[float]]] = Field(None, description="N x d node coordinates; unit interval when omitted")


class ScoreRequest(BaseModel):
    snapshots: SnapshotPayload
    pair_cap: Optional[int] = Field(None, ge=1, description="Pair cap, OSP_PAIR_CAP when omitted")
    rng_seed: int = Field(0, description="Seed for the pair subsample")


class ScoreResponse(BaseModel):
    scores: List[float]
    sampling_measure: List[float]
    n_pairs_used: int
    n_zero_skipped: int
    exact: bool


class PlaceRequest(BaseModel):
    snapshots: SnapshotPayload
    strategy: PlacementStrategy
    m: int = Field(..., ge=1)
    rng_seed: int = 0
    eps_reg: float = Field(1e-4, gt=0)
    pod_modes: int = Field(10, ge=1)
    pair_cap: Optional[int] = Field(None, ge=1)


class PlaceResponse(BaseModel):
    strategy: PlacementStrategy
    indices: List[int]
    flags: Dict[str, Any] = Field(default_factory=dict)


class PriorPayload(BaseModel):
    """Gaussian-mixture prior as nested lists"""
    weights: List[float]
    means: List[List[float]]
    variances: List[List[float]]


class DPSRequest(BaseModel):
    prior: PriorPayload
    indices: List[int] = Field(..., description="Sensor nodes, 0-based")
    y: List[float] = Field(..., description="One measurement per sensor")
    seed: int = 0
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)


class DPSResponse(BaseModel):
    estimate: List[float]
    residual_norm: float


class OracleRequest(BaseModel):
    mean: List[float]
    variance: List[float]
    indices: List[int]
    y: List[float]
    sigma_eta: float = Field(0.1, gt=0)


class OracleResponse(BaseModel):
    mean: List[float]
    variance: List[float]
