"""
Diffusion sampler models

SigmaSchedule and SamplerConfig describe the variance-exploding reverse
diffusion; ChainState is one chain's position along it.
"""

from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator


class GuidanceMode(str, Enum):
    """Whether the reverse pass is conditioned on measurements"""
    DPS = "dps"
    NONE = "none"


class SigmaSchedule(BaseModel):
    """Strictly decreasing noise levels sigma_0 > ... > sigma_{K-1} > 0, terminal 0 appended."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    sigmas: np.ndarray = Field(..., description="K + 1 levels, last entry 0")

    @field_validator("sigmas", mode="before")
    @classmethod
    def _coerce_sigmas(cls, value):
        sigmas = np.asarray(value, dtype=float)
        if sigmas.ndim != 1 or sigmas.shape[0] < 3:
            raise ValueError("a schedule needs at least two positive levels plus the terminal 0")
        if sigmas[-1] != 0.0 or np.any(sigmas[:-1] <= 0):
            raise ValueError("schedule must be positive with a terminal 0")
        if np.any(np.diff(sigmas) >= 0):
            raise ValueError("schedule must be strictly decreasing")
        return sigmas

    @field_serializer("sigmas")
    def _serialize_sigmas(self, sigmas: np.ndarray):
        return sigmas.tolist()

    @property
    def n_steps(self) -> int:
        return int(self.sigmas.shape[0] - 1)

    @property
    def sigma_max(self) -> float:
        return float(self.sigmas[0])

    @property
    def sigma_min(self) -> float:
        return float(self.sigmas[-2])


class SamplerConfig(BaseModel):
    """Reverse-diffusion and guidance settings"""
    n_steps: int = Field(50, ge=2, description="Number of positive noise levels")
    sigma_min: float = Field(0.002, gt=0)
    sigma_max: Optional[float] = Field(
        None, gt=0, description="Largest noise level; null derives 80 times the prior RMS scale"
    )
    rho_schedule: float = Field(7.0, gt=0, description="Karras schedule exponent")
    guidance_mode: GuidanceMode = GuidanceMode.DPS
    sigma_eta: float = Field(0.1, gt=0, description="Likelihood scale of the guidance term")
    heun: bool = Field(True, description="Heun (second order) instead of Euler predictor")
    stochastic: bool = Field(False, description="Euler-Maruyama reverse SDE instead of the probability-flow ODE")
    alpha_max: float = Field(10.0, ge=0, description="Clip for the linear guidance weight")
    guidance_clip: Optional[float] = Field(
        1.0, gt=0, description="Cap on the guidance increment in units of sigma_k * sqrt(N); null disables"
    )

    @model_validator(mode="after")
    def _check_range(self):
        if self.sigma_max is not None and not self.sigma_min < self.sigma_max:
            raise ValueError("sigma_min must be smaller than sigma_max")
        return self


class ChainState(BaseModel):
    """One reverse-diffusion chain"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    z: np.ndarray = Field(..., description="Current noisy state")
    sigma_index: int = Field(0, ge=0, description="Position in the schedule")
    log_like: Optional[float] = Field(None, description="Most recent measurement log-likelihood")

    @field_validator("z", mode="before")
    @classmethod
    def _coerce_state(cls, value):
        return np.asarray(value, dtype=float)

    @field_serializer("z")
    def _serialize_state(self, z: np.ndarray):
        return z.tolist()
