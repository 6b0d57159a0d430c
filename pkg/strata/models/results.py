"""Analysis, simulation and harness result schemas."""

from fractions import Fraction

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from strata.models.system import SchemeId


class WorkerTimes(BaseModel):
    """Single-task durations T_1..T_n, one per worker, none below the per-task floor."""

    model_config = ConfigDict(frozen=True)

    t_i: tuple[float, ...]
    shift: float = Field(default=0.0, ge=0)

    @field_validator("t_i")
    @classmethod
    def _finite_nonnegative(cls, t_i: tuple[float, ...]) -> tuple[float, ...]:
        if not t_i:
            raise ValueError("need at least one worker time")
        if not all(np.isfinite(t) and t >= 0 for t in t_i):
            raise ValueError("worker times must be finite and nonnegative")
        return t_i

    @model_validator(mode="after")
    def _not_below_shift(self) -> "WorkerTimes":
        if min(self.t_i) < self.shift:
            raise ValueError(f"worker time {min(self.t_i)} is below the shift {self.shift}")
        return self

    @property
    def n(self) -> int:
        return len(self.t_i)


class TrialResult(BaseModel):
    """Finishing time of one trial and the completion time of every layer."""

    model_config = ConfigDict(frozen=True)

    tau: float
    per_layer_done: tuple[float, ...]
    scheme: SchemeId = SchemeId.HIERARCHICAL

    @model_validator(mode="after")
    def _tau_is_last_layer(self) -> "TrialResult":
        if self.per_layer_done and self.tau != max(self.per_layer_done):
            raise ValueError("tau must equal the latest layer completion")
        return self


def _fraction_or_none(value: Fraction | None) -> float | None:
    return None if value is None else float(value)


class BaselineCoefficients(BaseModel):
    """Leading failure-exponent coefficients of the two baselines."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    L_p: Fraction | None = None
    L_u: Fraction | None = None

    @field_serializer("L_p", "L_u")
    def _as_float(self, value: Fraction | None) -> float | None:
        return _fraction_or_none(value)


class ExponentReport(BaseModel):
    """Leading coefficients L, L_p, L_u for one (n, k, r)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    k: int
    r: int
    L: Fraction
    L_p: Fraction | None = None
    L_u: Fraction | None = None
    argmin_layer: int = Field(ge=1)

    @field_serializer("L", "L_p", "L_u")
    def _as_float(self, value: Fraction | None) -> float | None:
        return _fraction_or_none(value)

    @property
    def ratio(self) -> Fraction | None:
        """L / L_p, when the baseline is defined."""
        if self.L_p is None:
            return None
        return self.L / self.L_p


class MonteCarloReport(BaseModel):
    """Empirical finishing-time statistics with standard errors."""

    model_config = ConfigDict(frozen=True)

    scheme: SchemeId
    trials: int
    seed: int
    mean: float
    mean_stderr: float
    t_grid: tuple[float, ...] = ()
    cdf: tuple[float, ...] = ()
    cdf_stderr: tuple[float, ...] = ()


class HarnessReport(BaseModel):
    """Outcome of one run of the message-passing execution harness."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    decoded_output: np.ndarray
    trial: TrialResult
    messages: int = Field(ge=0)
    worker_times: WorkerTimes
    decode_order: tuple[int, ...] = ()

    @field_serializer("decoded_output")
    def _as_list(self, value: np.ndarray) -> list:
        return value.tolist()


class SummationState(BaseModel):
    """Per-call memo of the layered summation: deltas and suffix sums H_j(m)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    deltas: np.ndarray
    memo: np.ndarray

    @property
    def value(self) -> float:
        """H_1(n): the finishing probability."""
        return float(self.memo[1, -1])
