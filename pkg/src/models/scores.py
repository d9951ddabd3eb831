"""
Score and basis models for christoffel-osp
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

# Each secant is unit-norm, so every squared coordinate is at most 1 up to rounding.
SCORE_ROUNDING = 1e-12


def _as_vector(value) -> np.ndarray:
    vector = np.asarray(value, dtype=float)
    if vector.ndim != 1:
        raise ValueError("expected a 1-D vector")
    if not np.all(np.isfinite(vector)):
        raise ValueError("vector entries must be finite")
    return vector


class ChristoffelScore(BaseModel):
    """Empirical Christoffel score K(j) over grid nodes."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    scores: np.ndarray = Field(..., description="Length-N score vector")
    n_pairs_used: int = Field(0, ge=0, description="Number of secants evaluated")
    n_zero_skipped: int = Field(0, ge=0, description="Zero-norm secants skipped")
    exact: bool = Field(True, description="True iff every pair was evaluated")

    @field_validator("scores", mode="before")
    @classmethod
    def _coerce_scores(cls, value):
        scores = _as_vector(value)
        if np.any(scores < 0) or np.any(scores > 1 + SCORE_ROUNDING):
            raise ValueError("Christoffel scores must lie in [0, 1]")
        return scores

    @field_serializer("scores")
    def _serialize_scores(self, scores: np.ndarray):
        return scores.tolist()

    @property
    def n_nodes(self) -> int:
        return int(self.scores.shape[0])


class SamplingMeasure(BaseModel):
    """Node probabilities mu*(j) mixing the Christoffel density with the uniform measure."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    probs: np.ndarray = Field(..., description="Length-N node probabilities")
    c_constant: float = Field(..., gt=0, description="Normalizer C = sum_j K(j) rho_j")

    @field_validator("probs", mode="before")
    @classmethod
    def _coerce_probs(cls, value):
        probs = _as_vector(value)
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        return probs

    @field_serializer("probs")
    def _serialize_probs(self, probs: np.ndarray):
        return probs.tolist()


class PodBasis(BaseModel):
    """Orthonormal POD modes of the mean-adjusted snapshots with their energies."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    modes: np.ndarray = Field(..., description="N x r matrix with orthonormal columns")
    energies: np.ndarray = Field(..., description="Squared singular values, nonincreasing")
    numerical_rank: int = Field(..., ge=0, description="Numerical rank of the snapshot matrix")
    clipped: bool = Field(False, description="True when the requested r was reduced to the numerical rank")

    @field_validator("modes", mode="before")
    @classmethod
    def _coerce_modes(cls, value):
        modes = np.asarray(value, dtype=float)
        if modes.ndim != 2:
            raise ValueError("modes must be an (N, r) matrix")
        return modes

    @field_validator("energies", mode="before")
    @classmethod
    def _coerce_energies(cls, value):
        return _as_vector(value)

    @model_validator(mode="after")
    def _check_basis(self):
        if self.modes.shape[1] != self.energies.shape[0]:
            raise ValueError("one energy per mode is required")
        if np.any(self.energies < 0) or np.any(np.diff(self.energies) > 0):
            raise ValueError("energies must be non-negative and nonincreasing")
        return self

    @property
    def rank(self) -> int:
        return int(self.modes.shape[1])

    @property
    def rank_deficient(self) -> bool:
        return self.rank > self.numerical_rank
