"""
Gaussian-mixture prior model

The prior P is a mixture of K Gaussians with diagonal covariances. It doubles
as the denoiser of the diffusion sampler: see src/diffusion/gmm.py.
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

WEIGHT_TOLERANCE = 1e-12


class GaussianMixturePrior(BaseModel):
    """Mixture sum_k w_k N(mean_k, diag(var_k)) over R^N"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    weights: np.ndarray = Field(..., description="Component weights, shape (K,)")
    means: np.ndarray = Field(..., description="Component means, shape (K, N)")
    variances: np.ndarray = Field(..., description="Diagonal variances, shape (K, N)")

    @field_validator("weights", mode="before")
    @classmethod
    def _coerce_weights(cls, value):
        return np.atleast_1d(np.asarray(value, dtype=float))

    @field_validator("means", "variances", mode="before")
    @classmethod
    def _coerce_matrix(cls, value):
        matrix = np.asarray(value, dtype=float)
        if matrix.ndim == 1:
            matrix = matrix[None, :]
        if matrix.ndim != 2:
            raise ValueError("means/variances must be (K, N) matrices")
        return matrix

    @model_validator(mode="after")
    def _check_mixture(self):
        n_components = self.weights.shape[0]
        if self.means.shape != self.variances.shape or self.means.shape[0] != n_components:
            raise ValueError(
                f"Inconsistent mixture shapes: weights {self.weights.shape}, "
                f"means {self.means.shape}, variances {self.variances.shape}"
            )
        for name in ("weights", "means", "variances"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} must be finite")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError("weights must be non-negative and sum to 1")
        if np.any(self.variances <= 0):
            raise ValueError("variances must be strictly positive")
        return self

    @field_serializer("weights", "means", "variances")
    def _serialize_array(self, array: np.ndarray):
        return array.tolist()

    @property
    def n_components(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_nodes(self) -> int:
        return int(self.means.shape[1])

    @property
    def mean(self) -> np.ndarray:
        """Mixture mean sum_k w_k mean_k"""
        return self.weights @ self.means

    @classmethod
    def single(cls, mean, variance) -> "GaussianMixturePrior":
        """One-component prior N(mean, diag(variance))."""
        mean = np.asarray(mean, dtype=float)
        variance = np.broadcast_to(np.asarray(variance, dtype=float), mean.shape)
        return cls(weights=[1.0], means=mean[None, :], variances=variance[None, :].copy())
