"""System shape, straggler law and layer allocation schemas."""

import sys

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:  # Python 3.10 backport of enum.StrEnum
    from enum import Enum

    class StrEnum(str, Enum):
        def __str__(self) -> str:
            return str(self.value)

        def __format__(self, format_spec: str) -> str:
            return str(self.value).__format__(format_spec)

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from strata.errors import InvalidArgumentError


class SystemShape(BaseModel):
    """Worker count n, task count k and layer count r."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    k: int = Field(ge=1)
    r: int = Field(ge=1)

    @model_validator(mode="after")
    def _layers_fit_tasks(self) -> "SystemShape":
        if self.r > self.k:
            raise ValueError(f"r={self.r} exceeds k={self.k}; every layer needs a task")
        return self


class StragglerModel(BaseModel):
    """Shifted-exponential duration of one small task: a + Exp(rate)."""

    model_config = ConfigDict(frozen=True)

    per_task_rate: float = Field(gt=0)
    per_task_shift: float = Field(default=0.0, ge=0)
    calibration_note: str = ""

    @property
    def rate(self) -> float:
        return self.per_task_rate

    @property
    def shift(self) -> float:
        return self.per_task_shift


class LayerAllocation(BaseModel):
    """Per-layer MDS dimensions (k_1, ..., k_r)."""

    model_config = ConfigDict(frozen=True)

    ks: tuple[int, ...]

    @field_validator("ks")
    @classmethod
    def _positive_layers(cls, ks: tuple[int, ...]) -> tuple[int, ...]:
        if not ks:
            raise ValueError("allocation needs at least one layer")
        if any(k_j < 1 for k_j in ks):
            raise ValueError(f"every layer needs k_j >= 1, got {ks}")
        return ks

    @property
    def r(self) -> int:
        return len(self.ks)

    @property
    def k(self) -> int:
        return sum(self.ks)

    def is_nonincreasing(self) -> bool:
        return all(a >= b for a, b in zip(self.ks, self.ks[1:], strict=False))

    def check_against(self, shape: SystemShape, cap: int | None = None) -> None:
        """Raise InvalidArgumentError unless the allocation fits `shape`.

        `cap` tightens the per-layer upper bound (n - S for the straggler-robust variant).
        """
        upper = shape.n if cap is None else cap
        if self.r != shape.r:
            raise InvalidArgumentError(f"allocation has {self.r} layers, shape has r={shape.r}")
        if self.k != shape.k:
            raise InvalidArgumentError(f"allocation sums to {self.k}, shape has k={shape.k}")
        if max(self.ks) > upper:
            raise InvalidArgumentError(f"allocation {self.ks} exceeds the per-layer bound {upper}")
        if not self.is_nonincreasing():
            raise InvalidArgumentError(f"allocation {self.ks} must be nonincreasing")


class SchemeId(StrEnum):
    """Coding scheme whose finishing time is analysed or simulated."""

    HIERARCHICAL = "hierarchical"
    MDS_BASELINE = "mds_baseline"
    UNCODED = "uncoded"

    def check_shape(self, shape: SystemShape) -> None:
        """Raise InvalidArgumentError if `shape` does not admit this scheme."""
        if self is SchemeId.MDS_BASELINE and shape.k % shape.r:
            raise InvalidArgumentError(
                f"the (n, k/r) baseline needs r | k, got k={shape.k}, r={shape.r}"
            )
        if self is SchemeId.MDS_BASELINE and shape.k // shape.r > shape.n:
            raise InvalidArgumentError(
                f"baseline code dimension k/r={shape.k // shape.r} exceeds n={shape.n}"
            )
        if self is SchemeId.UNCODED and shape.k % shape.n:
            raise InvalidArgumentError(
                f"uncoded computation needs n | k, got n={shape.n}, k={shape.k}"
            )
