"""
registry.py - Strategy dispatch for offline placement

PlacementContext lazily derives everything a strategy can need from one
snapshot set (mean-adjusted matrix, Christoffel score, POD bases) so that a
sweep computes each of them once.
"""

import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..christoffel.sampling import weighted_sample
from ..christoffel.scores import empirical_christoffel, snapshot_std_score
from ..errors import InvalidRequestError, UnknownStrategyError
from ..models.experiment import IIDMode, OEDCriterion, PlacementRequest, PlacementStrategy
from ..models.scores import ChristoffelScore, PodBasis
from ..models.sensing import Grid, SensorSelection, SnapshotSet
from ..seeding import derive_seed
from .greedy import greedy_christoffel_place, iid_christoffel_place, mean_adjust, random_place
from .oed import oed_place
from .pod import pod_basis, sspor_place

logger = logging.getLogger("placement.registry")

OED_STRATEGIES = {
    PlacementStrategy.A_OPT: (OEDCriterion.A, False),
    PlacementStrategy.D_OPT: (OEDCriterion.D, False),
    PlacementStrategy.E_OPT: (OEDCriterion.E, False),
    PlacementStrategy.D_OPT_REG: (OEDCriterion.D, True),
    PlacementStrategy.E_OPT_REG: (OEDCriterion.E, True),
}


class PlacementResult(BaseModel):
    """A selection plus the fallback flags raised while computing it"""
    selection: SensorSelection
    flags: Dict[str, Any] = Field(default_factory=dict)


class PlacementContext:
    """Cached derived quantities of one snapshot set"""

    def __init__(
        self,
        snapshots: SnapshotSet,
        pair_cap: Optional[int] = None,
        score_seed: Optional[int] = 0,
        score: Optional[ChristoffelScore] = None,
    ):
        self.snapshots = snapshots
        self.pair_cap = pair_cap
        self.score_seed = score_seed
        self._score = score
        self._X: Optional[np.ndarray] = None
        self._bases: Dict[Tuple[int, bool], PodBasis] = {}

    @property
    def n_nodes(self) -> int:
        return self.snapshots.n_nodes

    @property
    def X(self) -> np.ndarray:
        if self._X is None:
            self._X, _ = mean_adjust(self.snapshots)
        return self._X

    @property
    def score(self) -> ChristoffelScore:
        if self._score is None:
            self._score = empirical_christoffel(self.snapshots, self.pair_cap, self.score_seed)
        return self._score

    def basis(self, r: int, clip_to_rank: bool) -> PodBasis:
        r = min(r, self.snapshots.n_nodes, self.snapshots.n_snapshots)
        key = (r, clip_to_rank)
        if key not in self._bases:
            self._bases[key] = pod_basis(self.snapshots, r, clip_to_rank=clip_to_rank)
        return self._bases[key]


def place(request: PlacementRequest, context: PlacementContext) -> PlacementResult:
    """
    Run one offline placement strategy.

    Args:
        request: Strategy, budget and knobs
        context: Snapshot-derived quantities

    Returns:
        PlacementResult with the selection and any fallback flags

    Raises:
        UnknownStrategyError: the strategy has no offline placement
    """
    strategy = request.strategy
    m = request.m
    if m > context.n_nodes:
        raise InvalidRequestError(f"Sensor budget m={m} exceeds {context.n_nodes} nodes")
    flags: Dict[str, Any] = {}

    if strategy == PlacementStrategy.RANDOM:
        selection = random_place(context.n_nodes, m, request.rng_seed)
    elif strategy == PlacementStrategy.CHRISTOFFEL_GREEDY:
        selection = greedy_christoffel_place(context.X, m, request.rng_seed)
    elif strategy in (PlacementStrategy.CHRISTOFFEL_IID, PlacementStrategy.CHRISTOFFEL_IID_RAW):
        mode = IIDMode.MU_STAR if strategy == PlacementStrategy.CHRISTOFFEL_IID else IIDMode.RAW
        selection = iid_christoffel_place(
            context.score, m, mode=mode, rng_seed=request.rng_seed, replacement=request.replacement
        )
        flags["score_exact"] = context.score.exact
    elif strategy == PlacementStrategy.ENSEMBLE_STD:
        draws = weighted_sample(snapshot_std_score(context.snapshots), m, rng_seed=request.rng_seed)
        selection = SensorSelection(indices=draws)
    elif strategy == PlacementStrategy.SSPOR:
        basis = context.basis(request.pod_modes, clip_to_rank=True)
        selection, n_filled = sspor_place(basis, m, context.X, request.rng_seed)
        flags.update(pod_rank=basis.rank, pod_clipped=basis.clipped, random_fill=n_filled)
    elif strategy in OED_STRATEGIES:
        criterion, regularized = OED_STRATEGIES[strategy]
        basis = context.basis(request.pod_modes, clip_to_rank=False)
        selection, path = oed_place(
            basis, m, criterion, regularized=regularized,
            eps_reg=request.eps_reg, sigma_eta=request.sigma_eta,
        )
        flags.update(pod_rank=basis.numerical_rank, information_rank=path[-1][0])
    else:
        raise UnknownStrategyError(f"Strategy {strategy.value} has no offline placement")

    logger.info(f"{strategy.value} placed m={m}: {list(selection.indices)}")
    return PlacementResult(selection=selection, flags=flags)


def place_per_channel(
    request: PlacementRequest,
    snapshots: SnapshotSet,
    n_channels: int,
    pair_cap: Optional[int] = None,
) -> PlacementResult:
    """
    Place request.m sensors independently in each channel and concatenate.

    The N nodes are split into n_channels equal contiguous blocks (for
    example a coefficient field followed by a solution field); returned
    indices refer to the stacked field.
    """
    if n_channels < 1 or snapshots.n_nodes % n_channels:
        raise InvalidRequestError(f"{snapshots.n_nodes} nodes cannot be split into {n_channels} channels")
    block = snapshots.n_nodes // n_channels
    indices = []
    flags: Dict[str, Any] = {}
    for channel in range(n_channels):
        rows = slice(channel * block, (channel + 1) * block)
        part = SnapshotSet(
            grid=Grid(coords=snapshots.grid.coords[rows]),
            data=snapshots.data[rows],
        )
        channel_request = request.model_copy(
            update={"rng_seed": derive_seed(request.rng_seed, "channel", channel)}
        )
        result = place(channel_request, PlacementContext(part, pair_cap=pair_cap))
        indices += [channel * block + i for i in result.selection.indices]
        flags[f"channel_{channel}"] = result.flags
    return PlacementResult(selection=SensorSelection(indices=indices), flags=flags)
