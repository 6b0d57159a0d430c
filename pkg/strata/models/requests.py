"""Request and response models of the HTTP API."""

from typing import Literal

from pydantic import BaseModel, Field

from strata.models.system import SchemeId, StragglerModel


class MaximinRequest(BaseModel):
    """Request model for a maximin allocation at fixed r."""

    n: int = Field(ge=1)
    k: int = Field(ge=1)
    r: int = Field(ge=1)
    stragglers: int = Field(default=0, ge=0)


class SelectRRequest(BaseModel):
    """Request model for sweeping r."""

    n: int = Field(ge=1)
    k: int = Field(ge=1)
    r_max: int | None = Field(default=None, ge=1)
    stragglers: int = Field(default=0, ge=0)


class SystemRequest(BaseModel):
    """Shape, delay law and (optionally) the allocation shared by analysis requests."""

    n: int = Field(ge=1)
    k: int | None = Field(default=None, ge=1)
    r: int | None = Field(default=None, ge=1)
    ks: tuple[int, ...] | None = None
    stragglers: int = Field(default=0, ge=0)
    rate: float = Field(gt=0)
    shift: float = Field(default=0.0, ge=0)
    scheme: SchemeId = SchemeId.HIERARCHICAL

    def straggler_model(self) -> StragglerModel:
        return StragglerModel(per_task_rate=self.rate, per_task_shift=self.shift)


class ExactRequest(SystemRequest):
    """Request model for exact probability maximization at time t."""

    t: float = Field(gt=0)


class CurveRequest(SystemRequest):
    t_grid: list[float] = Field(min_length=1)


class CurvePoint(BaseModel):
    t: float
    cdf: float
    tail: float
    asymptotic_tail: float | None = None


class CurveResponse(BaseModel):
    """Analytic finishing-time curve of one scheme."""

    scheme: SchemeId
    ks: tuple[int, ...]
    points: list[CurvePoint]


class ExpectedResponse(BaseModel):
    scheme: SchemeId
    ks: tuple[int, ...]
    expected_time: float


class ExponentsRequest(BaseModel):
    """Request model for leading coefficients; r is selected when omitted."""

    n: int = Field(ge=1)
    k: int = Field(ge=1)
    r: int | None = Field(default=None, ge=1)
    mu: float = Field(gt=0)


class AllocationResponse(BaseModel):
    """Allocation with its exact objective as a numerator/denominator pair."""

    r: int
    ks: tuple[int, ...]
    z: dict[str, int]
    z_float: float
    straggler_margin: int = 0
    finishing_probability: float | None = None


class MonteCarloRequest(CurveRequest):
    trials: int = Field(ge=1, le=1_000_000)
    seed: int | None = None
    per_task_draws: bool = False


class HarnessRequest(SystemRequest):
    """Runs a random integer job with `rows_per_task` rows per task and `cols` columns."""

    rows_per_task: int = Field(default=2, ge=1)
    cols: int = Field(default=3, ge=1)
    seed: int | None = None
    field: Literal["real", "prime"] = "prime"
    crashes: dict[int, int] = Field(default_factory=dict)
    deadline: float | None = None
