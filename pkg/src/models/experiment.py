"""
Experiment configuration and result models

An ExperimentConfig is the single JSON file that drives `bench`; ResultRow is
one (strategy, m, seed) cell of the sweep.
"""

import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from ..config import get_settings
from .online import OnlineConfig
from .sampler import SamplerConfig


class PlacementStrategy(str, Enum):
    """Sensor placement strategies"""
    RANDOM = "random"
    CHRISTOFFEL_IID = "christoffel_iid"
    CHRISTOFFEL_IID_RAW = "christoffel_iid_raw"
    CHRISTOFFEL_GREEDY = "christoffel_greedy"
    SSPOR = "sspor"
    A_OPT = "a_opt"
    D_OPT = "d_opt"
    E_OPT = "e_opt"
    D_OPT_REG = "d_opt_reg"
    E_OPT_REG = "e_opt_reg"
    ENSEMBLE_STD = "ensemble_std"
    ONLINE_CHRISTOFFEL = "online_christoffel"
    ONLINE_ENSEMBLE_STD = "online_ensemble_std"

    @property
    def is_online(self) -> bool:
        return self in (PlacementStrategy.ONLINE_CHRISTOFFEL, PlacementStrategy.ONLINE_ENSEMBLE_STD)

    @property
    def is_regularized(self) -> bool:
        return self in (PlacementStrategy.D_OPT_REG, PlacementStrategy.E_OPT_REG)


class OEDCriterion(str, Enum):
    """Classical optimal-design criteria"""
    A = "A"
    D = "D"
    E = "E"


class IIDMode(str, Enum):
    """Sampling law for i.i.d. Christoffel placement"""
    MU_STAR = "mu_star"
    RAW = "raw"


class PlacementRequest(BaseModel):
    """One offline placement: strategy, budget and its knobs"""
    strategy: PlacementStrategy
    m: int = Field(..., ge=1, description="Sensor budget")
    rng_seed: int = Field(0, description="Seed for randomized strategies")
    eps_reg: float = Field(1e-4, description="Tikhonov epsilon for *_reg strategies")
    sigma_eta: float = Field(0.1, gt=0, description="Likelihood scale in the regularized information matrix")
    pod_modes: int = Field(10, ge=1, description="POD modes used by SSPOR and the OED criteria")
    replacement: bool = Field(False, description="Draw i.i.d. strategies with replacement")

    @model_validator(mode="after")
    def _check_eps(self):
        if self.strategy.is_regularized and not self.eps_reg > 0:
            raise ValueError("eps_reg must be positive for regularized strategies")
        return self


class DatasetName(str, Enum):
    """Synthetic dataset generators"""
    BUMP_MANIFOLD = "bump_manifold"
    UNION_SUBSPACES = "union_subspaces"
    GMM = "gmm"
    FIXED_BUMPS = "fixed_bumps"


class DatasetSpec(BaseModel):
    """Dataset name, size, generator parameters and seed"""
    name: DatasetName = DatasetName.BUMP_MANIFOLD
    n_nodes: int = Field(64, ge=8)
    n_snapshots: int = Field(200, ge=2)
    dim: int = Field(1, ge=1, le=2, description="Spatial dimension; 2 requires a square node count")
    seed: int = 0
    width: float = Field(0.1, gt=0)
    amplitude_range: Tuple[float, float] = (0.5, 1.5)
    n_subspaces: int = Field(1, ge=1)
    dim_per: int = Field(2, ge=1)
    n_components: int = Field(4, ge=1)
    separation: float = Field(1.0, gt=0)
    component_variance: float = Field(1e-2, gt=0, description="Diagonal variance of generated mixture components")
    centers: List[float] = Field(default_factory=lambda: [0.35, 0.65])
    prior_variance: float = Field(1e-3, gt=0, description="Per-snapshot variance of the empirical prior")

    @model_validator(mode="after")
    def _check_dataset(self):
        if self.dim == 2 and math.isqrt(self.n_nodes) ** 2 != self.n_nodes:
            raise ValueError("2-D datasets need a square number of nodes")
        if self.amplitude_range[0] > self.amplitude_range[1]:
            raise ValueError("amplitude_range must be (low, high)")
        return self


class OutputSpec(BaseModel):
    """Where bench writes its artifacts"""
    rows_csv: Optional[str] = None
    summary_csv: Optional[str] = None
    trace_dir: Optional[str] = None


class ExperimentConfig(BaseModel):
    """Full sweep definition for `bench` and single-cell `reconstruct` runs"""
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    strategies: List[PlacementStrategy] = Field(
        default_factory=lambda: [PlacementStrategy.RANDOM, PlacementStrategy.CHRISTOFFEL_GREEDY]
    )
    m_values: List[int] = Field(default_factory=lambda: [2, 3, 4, 6, 8, 12, 16])
    n_seeds: int = Field(10, ge=1)
    seed: int = Field(0, description="Base seed for every derived stream")
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    online: Optional[OnlineConfig] = None
    pair_cap: int = Field(default_factory=lambda: get_settings().pair_cap, ge=1)
    eps_reg: float = Field(1e-4, gt=0)
    pod_modes: int = Field(10, ge=1)
    n_jobs: int = Field(
        default_factory=lambda: get_settings().n_jobs,
        description="joblib workers; row order does not depend on it",
    )
    output: OutputSpec = Field(default_factory=OutputSpec)

    @model_validator(mode="after")
    def _check_sweep(self):
        if not self.m_values or any(m < 1 or m > self.dataset.n_nodes for m in self.m_values):
            raise ValueError(f"m values must lie in [1, {self.dataset.n_nodes}]")
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        return self

    def online_config(self) -> OnlineConfig:
        return self.online or OnlineConfig()


class ResultRow(BaseModel):
    """One benchmark cell"""
    dataset: str
    strategy: str
    m: int
    seed: int
    status: str = "ok"
    rel_l2: Optional[float] = None
    wall_time_ms: float = 0.0
    extra: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_error(self):
        if self.status == "ok":
            if self.rel_l2 is None or not math.isfinite(self.rel_l2) or self.rel_l2 < 0:
                raise ValueError("successful rows need a finite, non-negative rel_l2")
        return self

    def sort_key(self):
        return (self.dataset, self.strategy, self.m, self.seed)
