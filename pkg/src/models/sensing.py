"""
Sensing models for christoffel-osp

This module defines the grid, snapshot and sensor-selection models shared by
every other package: the finite-grid state x in R^N, the snapshot matrix the
Christoffel scores are computed from, and the row-selector S.
"""

from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator


class Grid(BaseModel):
    """A fixed set of N nodes in R^d (d = 1 or 2)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coords: np.ndarray = Field(..., description="Node coordinates, shape (N, d)")

    @field_validator("coords", mode="before")
    @classmethod
    def _coerce_coords(cls, value):
        coords = np.asarray(value, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] < 1:
            raise ValueError("coords must be a non-empty (N, d) array")
        if coords.shape[1] not in (1, 2):
            raise ValueError(f"Grid dimension must be 1 or 2, got {coords.shape[1]}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("Grid coordinates must be finite")
        return coords

    @field_serializer("coords")
    def _serialize_coords(self, coords: np.ndarray):
        return coords.tolist()

    @property
    def n_nodes(self) -> int:
        return int(self.coords.shape[0])

    @property
    def dim(self) -> int:
        return int(self.coords.shape[1])


class SnapshotSet(BaseModel):
    """N x M matrix of state snapshots; column n is snapshot x^(n)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: Grid
    data: np.ndarray = Field(..., description="Snapshot matrix, shape (N, M)")

    @field_validator("data", mode="before")
    @classmethod
    def _coerce_data(cls, value):
        data = np.asarray(value, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise ValueError("data must be an (N, M) matrix")
        if not np.all(np.isfinite(data)):
            raise ValueError("Snapshot data must be finite")
        return data

    @model_validator(mode="after")
    def _check_shape(self):
        if self.data.shape[0] != self.grid.n_nodes:
            raise ValueError(
                f"Snapshot rows ({self.data.shape[0]}) do not match grid nodes ({self.grid.n_nodes})"
            )
        return self

    @field_serializer("data")
    def _serialize_data(self, data: np.ndarray):
        return data.tolist()

    @property
    def n_nodes(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_snapshots(self) -> int:
        return int(self.data.shape[1])

    def scaled(self, factor: float) -> "SnapshotSet":
        return SnapshotSet(grid=self.grid, data=self.data * factor)


class SensorSelection(BaseModel):
    """
    Ordered list of distinct node indices; the first n_anchor entries are
    anchors that never move, the rest are mobile sensors.
    """
    model_config = ConfigDict(frozen=True)

    indices: Tuple[int, ...] = Field(default_factory=tuple, description="0-based node indices in pick order")
    n_anchor: int = Field(0, ge=0, description="Number of leading immutable indices")

    @field_validator("indices", mode="before")
    @classmethod
    def _coerce_indices(cls, value):
        return tuple(int(i) for i in value)

    @model_validator(mode="after")
    def _check_indices(self):
        if any(i < 0 for i in self.indices):
            raise ValueError("Node indices must be non-negative")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError(f"Sensor indices must be distinct: {list(self.indices)}")
        if self.n_anchor > len(self.indices):
            raise ValueError("n_anchor cannot exceed the number of sensors")
        return self

    @property
    def m(self) -> int:
        return len(self.indices)

    @property
    def anchors(self) -> Tuple[int, ...]:
        return self.indices[:self.n_anchor]

    @property
    def mobile(self) -> Tuple[int, ...]:
        return self.indices[self.n_anchor:]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

