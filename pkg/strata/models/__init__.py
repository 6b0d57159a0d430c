"""Pydantic schemas for strata."""

from strata.models.allocation import MaximinSolution
from strata.models.codec import EncodedTask, GeneratorSpec, LayerPlan, LinearJob
from strata.models.results import (
    BaselineCoefficients,
    ExponentReport,
    HarnessReport,
    MonteCarloReport,
    SummationState,
    TrialResult,
    WorkerTimes,
)
from strata.models.run_config import RunConfig
from strata.models.system import LayerAllocation, SchemeId, StragglerModel, SystemShape

__all__ = [
    "BaselineCoefficients",
    "EncodedTask",
    "ExponentReport",
    "GeneratorSpec",
    "HarnessReport",
    "LayerAllocation",
    "LayerPlan",
    "LinearJob",
    "MaximinSolution",
    "MonteCarloReport",
    "RunConfig",
    "SchemeId",
    "StragglerModel",
    "SummationState",
    "SystemShape",
    "TrialResult",
    "WorkerTimes",
]
