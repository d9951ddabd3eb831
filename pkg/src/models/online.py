"""
Online ensemble Christoffel-DPS models

OnlineConfig holds the drift/prune/collapse hyperparameters, EnsembleState the
running ensemble, and OnlineTrace the JSON-serializable record of a run.
"""

from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .sampler import ChainState
from .sensing import SensorSelection


class CollapseMode(str, Enum):
    """How the surviving ensemble is reduced to one reconstruction"""
    BEST_LIKELIHOOD = "best_likelihood"
    MEAN_SURVIVORS = "mean_survivors"


class ScoreMode(str, Enum):
    """Which ensemble score drives mobile-sensor relocation"""
    CHRISTOFFEL = "christoffel"
    ENSEMBLE_STD = "ensemble_std"


class RelocationMeasure(str, Enum):
    """Draw relocations proportional to the raw score or to mu*"""
    RAW = "raw"
    MU_STAR = "mu_star"


class OnlineConfig(BaseModel):
    """Hyperparameters of the online ensemble loop"""
    n_ensemble: int = Field(20, ge=1, description="Number of chains N_e")
    n_drift_events: int = Field(10, ge=0, description="Number of drift events D")
    drift_levels: Optional[List[int]] = Field(
        None, description="Schedule indices after which a drift event fires; log-spaced when omitted"
    )
    n_anchor: int = Field(3, ge=0, description="Anchor sensors m0")
    n_mobile: int = Field(3, ge=0, description="Mobile sensors m1")
    r_drift: Optional[float] = Field(
        None, gt=0, description="Drift radius in grid units; 25% of the bounding-box diagonal when omitted"
    )
    prune_gap: Optional[float] = Field(1.0, ge=0, description="Pruning gap per sensor; null disables pruning")
    n_min: int = Field(1, ge=1, description="Floor on the alive ensemble size")
    collapse_mode: CollapseMode = CollapseMode.BEST_LIKELIHOOD
    score_mode: ScoreMode = ScoreMode.CHRISTOFFEL
    relocation_measure: RelocationMeasure = RelocationMeasure.RAW
    incremental: bool = Field(False, description="Add n_d new sensors per event instead of relocating all")
    sigma_noise: Optional[float] = Field(None, ge=0, description="Measurement noise; defaults to sigma_eta")
    record_scores: bool = Field(True, description="Store per-event score vectors in the trace")

    @model_validator(mode="after")
    def _check_online(self):
        if self.n_min > self.n_ensemble:
            raise ValueError("n_min cannot exceed n_ensemble")
        if self.drift_levels is not None:
            if len(self.drift_levels) != self.n_drift_events:
                raise ValueError("drift_levels must contain exactly n_drift_events entries")
            if any(b <= a for a, b in zip(self.drift_levels, self.drift_levels[1:])):
                raise ValueError("drift_levels must be strictly increasing schedule indices")
            if any(level < 1 for level in self.drift_levels):
                raise ValueError("drift levels are schedule indices >= 1")
        return self

    @property
    def m(self) -> int:
        return self.n_anchor + self.n_mobile

    @property
    def gap(self) -> float:
        return float("inf") if self.prune_gap is None else float(self.prune_gap)


class EnsembleState(BaseModel):
    """The live ensemble between drift events"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    chains: List[ChainState]
    alive: List[int]
    selection: SensorSelection
    y: np.ndarray = Field(..., description="Current measurement vector")
    estimates: np.ndarray = Field(..., description="Cached Tweedie estimates, shape (N_e, N)")

    @field_validator("y", "estimates", mode="before")
    @classmethod
    def _coerce_array(cls, value):
        return np.asarray(value, dtype=float)

    @property
    def log_likes(self) -> np.ndarray:
        return np.array([
            -np.inf if chain.log_like is None else chain.log_like for chain in self.chains
        ])


class Relocation(BaseModel):
    """One mobile sensor's move at a drift event"""
    sensor: int = Field(..., description="Position of the sensor in the selection")
    old_node: int
    new_node: int
    radius: float = Field(..., description="Radius the draw was restricted to")
    doublings: int = Field(0, ge=0, description="Radius doublings needed to find a free node")
    displacement: float = Field(..., ge=0)
    added: bool = Field(False, description="True when the sensor was introduced at this event")

    @property
    def fallback(self) -> bool:
        return self.doublings > 0


class DriftEventRecord(BaseModel):
    """State of the ensemble right after one drift event"""
    step: int = Field(..., description="Schedule index the event fired at")
    sigma: float
    selection: List[int]
    n_anchor: int
    y: List[float]
    alive: List[int]
    log_likes: List[Optional[float]] = Field(..., description="Per-chain log-likelihood, None for pruned chains")
    relocations: List[Relocation] = Field(default_factory=list)
    scores: Optional[List[float]] = None
    score_fallback: bool = Field(False, description="True when the score was degenerate and uniform draws were used")


class OnlineTrace(BaseModel):
    """JSON record of a run_online call, replayable by invariant checks"""
    noise_seed: int
    sigma_noise: float
    chain_seeds: List[int]
    r_drift: float
    drift_levels: List[int]
    initial_selection: List[int]
    n_anchor: int
    initial_y: List[float]
    events: List[DriftEventRecord] = Field(default_factory=list)
    final_alive: List[int] = Field(default_factory=list)
    final_log_likes: List[Optional[float]] = Field(default_factory=list)
    collapse_mode: CollapseMode = CollapseMode.BEST_LIKELIHOOD
