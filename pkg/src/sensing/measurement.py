"""
measurement.py - Grids, the sensing model and error norms

This module realizes the finite-grid measurement model y_S = S x* + n: the
row-selector S as an index gather, seeded Gaussian measurement noise (fresh
per call or cached once per node for a whole run), and the relative L2
error used by every benchmark.
"""

import logging
import math
from typing import Optional

import numpy as np

from ..errors import DegenerateDataError, InvalidRequestError, SelectionError
from ..models.sensing import Grid, SensorSelection

logger = logging.getLogger("sensing.measurement")


def grid_1d(n_nodes: int) -> Grid:
    """N equispaced nodes on [0, 1], endpoints included."""
    if n_nodes < 1:
        raise InvalidRequestError(f"Grid needs at least one node, got {n_nodes}")
    return Grid(coords=np.linspace(0.0, 1.0, n_nodes))


def grid_2d(side: int) -> Grid:
    """
    side x side equispaced nodes on the unit square.

    Nodes are numbered row-major: node i*side + j sits at (x_j, y_i).
    """
    if side < 1:
        raise InvalidRequestError(f"Grid needs at least one node per side, got {side}")
    axis = np.linspace(0.0, 1.0, side)
    xx, yy = np.meshgrid(axis, axis)
    return Grid(coords=np.column_stack([xx.ravel(), yy.ravel()]))


def grid_for(n_nodes: int, dim: int = 1) -> Grid:
    if dim == 1:
        return grid_1d(n_nodes)
    side = math.isqrt(n_nodes)
    if side * side != n_nodes:
        raise InvalidRequestError(f"2-D grids need a square node count, got {n_nodes}")
    return grid_2d(side)


def bounding_diagonal(grid: Grid) -> float:
    """Length of the diagonal of the grid's axis-aligned bounding box."""
    extent = grid.coords.max(axis=0) - grid.coords.min(axis=0)
    return float(np.linalg.norm(extent))


def _check_selection(selection: SensorSelection, n_nodes: int) -> np.ndarray:
    indices = selection.as_array()
    if indices.size and indices.max() >= n_nodes:
        raise SelectionError(
            f"Sensor index {int(indices.max())} out of range for a field with {n_nodes} nodes"
        )
    return indices


def select(selection: SensorSelection, x: np.ndarray) -> np.ndarray:
    """
    Apply the row-selector S to a field.

    Args:
        selection: Sensor selection
        x: Field vector of length N

    Returns:
        Length-m vector with output[i] = x[selection.indices[i]]
    """
    x = np.asarray(x, dtype=float)
    indices = _check_selection(selection, x.shape[-1])
    return x[..., indices]


def measure(
    selection: SensorSelection,
    x_star: np.ndarray,
    sigma_noise: float,
    rng_seed: Optional[int] = None,
) -> np.ndarray:
    """
    Noisy point measurements y = S x* + n with n ~ N(0, sigma_noise^2 I).

    Args:
        selection: Sensor selection
        x_star: Ground-truth field
        sigma_noise: Noise standard deviation, 0 gives the exact gather
        rng_seed: Seed for the noise draw

    Returns:
        Length-m measurement vector, deterministic given the seed
    """
    if sigma_noise < 0:
        raise InvalidRequestError(f"sigma_noise must be non-negative, got {sigma_noise}")
    y = select(selection, x_star)
    if sigma_noise == 0:
        return y
    rng = np.random.default_rng(rng_seed)
    return y + rng.normal(0.0, sigma_noise, size=y.shape)


def node_noise(n_nodes: int, sigma_noise: float, rng_seed: Optional[int] = None) -> np.ndarray:
    """One noise realization per grid node; revisiting a node returns the same reading."""
    if sigma_noise < 0:
        raise InvalidRequestError(f"sigma_noise must be non-negative, got {sigma_noise}")
    if sigma_noise == 0:
        return np.zeros(n_nodes)
    return np.random.default_rng(rng_seed).normal(0.0, sigma_noise, size=n_nodes)


def measure_cached(selection: SensorSelection, x_star: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Measurements using a per-node noise realization from node_noise."""
    indices = _check_selection(selection, np.asarray(x_star).shape[-1])
    return select(selection, x_star) + np.asarray(noise, dtype=float)[indices]


def relative_l2(x_hat: np.ndarray, x_star: np.ndarray) -> float:
    """Relative L2 error ||x_hat - x*|| / ||x*||."""
    x_hat = np.asarray(x_hat, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    if x_hat.shape != x_star.shape:
        raise SelectionError(f"Shape mismatch: {x_hat.shape} vs {x_star.shape}")
    reference = np.linalg.norm(x_star)
    if reference == 0:
        raise DegenerateDataError("Relative error is undefined for a zero reference field")
    return float(np.linalg.norm(x_hat - x_star) / reference)
