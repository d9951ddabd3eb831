"""Pydantic domain models shared across christoffel-osp"""

from .experiment import (
    DatasetName,
    DatasetSpec,
    ExperimentConfig,
    IIDMode,
    OEDCriterion,
    OutputSpec,
    PlacementRequest,
    PlacementStrategy,
    ResultRow,
)
from .online import (
    CollapseMode,
    DriftEventRecord,
    EnsembleState,
    OnlineConfig,
    OnlineTrace,
    RelocationMeasure,
    Relocation,
    ScoreMode,
)
from .prior import GaussianMixturePrior
from .sampler import ChainState, GuidanceMode, SamplerConfig, SigmaSchedule
from .scores import ChristoffelScore, PodBasis, SamplingMeasure
from .sensing import Grid, SensorSelection, SnapshotSet
