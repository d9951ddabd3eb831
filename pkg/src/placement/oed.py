"""
oed.py - Greedy A-, D- and E-optimal placement on a POD basis

The information matrix of a selection S is M_S = V_S^T V_S, plus the scaled
prior precision sigma_eta^2 * diag(1 / (lambda + eps)) in the Tikhonov
variants. Nodes are added one at a time, each maximizing the criterion.
Before M_S reaches full rank the criteria use the positive spectrum only, and
candidates are compared on (rank of M_S, criterion value).
"""

import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..errors import InvalidRequestError
from ..models.experiment import OEDCriterion
from ..models.scores import PodBasis
from ..models.sensing import SensorSelection
from .greedy import _check_budget

logger = logging.getLogger("placement.oed")

# Relative eigenvalue cutoff for the positive spectrum
RANK_TOLERANCE = 1e-10
# Relative margin a candidate must beat the incumbent by
TIE_TOLERANCE = 1e-12


def _positive_spectrum(eigenvalues: np.ndarray) -> np.ndarray:
    cutoff = RANK_TOLERANCE * max(1.0, float(eigenvalues.max(initial=0.0)))
    return eigenvalues[eigenvalues > cutoff]


def a_criterion(eigenvalues: np.ndarray) -> float:
    """-trace(M^+): larger is better."""
    positive = _positive_spectrum(eigenvalues)
    return -float(np.sum(1.0 / positive)) if positive.size else -np.inf


def d_criterion(eigenvalues: np.ndarray) -> float:
    """log pseudo-determinant"""
    positive = _positive_spectrum(eigenvalues)
    return float(np.sum(np.log(positive))) if positive.size else -np.inf


def e_criterion(eigenvalues: np.ndarray) -> float:
    """Smallest eigenvalue, 0 while rank-deficient."""
    positive = _positive_spectrum(eigenvalues)
    if positive.size < eigenvalues.size:
        return 0.0
    return float(positive.min())


CRITERIA: Dict[OEDCriterion, Callable[[np.ndarray], float]] = {
    OEDCriterion.A: a_criterion,
    OEDCriterion.D: d_criterion,
    OEDCriterion.E: e_criterion,
}


def prior_precision(basis: PodBasis, eps_reg: float, sigma_eta: float) -> np.ndarray:
    """sigma_eta^2 * Sigma_0^{-1} with Sigma_0 = diag(lambda) + eps I."""
    return np.diag(sigma_eta ** 2 / (basis.energies + eps_reg))


def criterion_key(information: np.ndarray, criterion: OEDCriterion) -> Tuple[int, float]:
    eigenvalues = np.linalg.eigvalsh(information)
    rank = int(_positive_spectrum(eigenvalues).size)
    return rank, CRITERIA[criterion](eigenvalues)


def _beats(candidate: Tuple[int, float], incumbent: Optional[Tuple[int, float]]) -> bool:
    if incumbent is None:
        return True
    if candidate[0] != incumbent[0]:
        return candidate[0] > incumbent[0]
    if np.isinf(incumbent[1]):
        return candidate[1] > incumbent[1]
    return candidate[1] > incumbent[1] + TIE_TOLERANCE * (1.0 + abs(incumbent[1]))


def oed_place(
    basis: PodBasis,
    m: int,
    criterion: OEDCriterion,
    regularized: bool = False,
    eps_reg: float = 1e-4,
    sigma_eta: float = 0.1,
) -> Tuple[SensorSelection, List[Tuple[int, float]]]:
    """
    Greedy forward OED selection.

    Args:
        basis: POD basis (zero-energy modes allowed)
        m: Sensor budget
        criterion: A, D or E
        regularized: Add the Tikhonov prior precision
        eps_reg: Tikhonov epsilon
        sigma_eta: Likelihood scale

    Returns:
        (selection, path) where path[k] is the (rank, value) key after k + 1 picks
    """
    criterion = OEDCriterion(criterion)
    V = basis.modes
    n_nodes, n_modes = V.shape
    _check_budget(m, n_nodes)
    if regularized and not eps_reg > 0:
        raise InvalidRequestError("eps_reg must be positive for regularized OED")

    information = prior_precision(basis, eps_reg, sigma_eta) if regularized else np.zeros((n_modes, n_modes))
    selected = np.zeros(n_nodes, dtype=bool)
    picks: List[int] = []
    path: List[Tuple[int, float]] = []

    for _ in range(m):
        best_key, best_node = None, -1
        for node in np.flatnonzero(~selected):
            key = criterion_key(information + np.outer(V[node], V[node]), criterion)
            if _beats(key, best_key):
                best_key, best_node = key, int(node)
        picks.append(best_node)
        selected[best_node] = True
        information = information + np.outer(V[best_node], V[best_node])
        path.append(best_key)

    label = f"{criterion.value}-opt{'-reg' if regularized else ''}"
    logger.info(f"{label} placed {m} sensors, final rank {path[-1][0]}/{n_modes}")
    return SensorSelection(indices=picks), path
