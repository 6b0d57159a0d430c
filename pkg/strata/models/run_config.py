"""Run configuration shared by the CLI and the HTTP API."""

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from strata.config import settings
from strata.errors import InvalidArgumentError
from strata.models.system import SchemeId, StragglerModel, SystemShape

PresetName = Literal["fig3", "fig4", "fig5", "fig6", "none"]


class RunConfig(BaseModel):
    """Everything a command needs; loaded from --config JSON and overridden by flags."""

    model_config = ConfigDict(frozen=True)

    n: int | None = Field(default=None, ge=1)
    k: int | None = Field(default=None, ge=1)
    r: int | None = Field(default=None, ge=1)
    rate: float | None = Field(default=None, gt=0)
    shift: float | None = Field(default=None, ge=0)
    mu: float | None = Field(default=None, gt=0)
    alpha: float | None = Field(default=None, ge=0)
    ks: tuple[int, ...] | None = None
    stragglers: int = Field(default=0, ge=0)
    scheme: SchemeId = SchemeId.HIERARCHICAL
    t_grid: tuple[float, ...] = ()
    trials: int = Field(default=0, ge=0)
    seed: int = settings.default_seed
    out: Path | None = None
    preset: PresetName = "none"
    field: Literal["real", "prime"] = "real"

    @field_validator("t_grid")
    @classmethod
    def _strictly_increasing(cls, t_grid: tuple[float, ...]) -> tuple[float, ...]:
        if any(b <= a for a, b in zip(t_grid, t_grid[1:], strict=False)):
            raise ValueError(f"t_grid must be strictly increasing, got {t_grid}")
        if any(t < 0 for t in t_grid):
            raise ValueError("t_grid values must be nonnegative")
        return t_grid

    def merged(self, **overrides) -> "RunConfig":
        """Copy with every non-None override applied (flags beat file values)."""
        data = self.model_dump()
        data.update({key: value for key, value in overrides.items() if value is not None})
        return RunConfig.model_validate(data)

    def shape(self) -> SystemShape:
        if self.n is None or self.k is None or self.r is None:
            raise InvalidArgumentError("n, k and r are all required")
        return SystemShape(n=self.n, k=self.k, r=self.r)

    def straggler_model(self) -> StragglerModel:
        """Per-task law; --rate/--shift win, otherwise lambda = mu and a = alpha."""
        rate = self.rate if self.rate is not None else self.mu
        shift = self.shift if self.shift is not None else self.alpha
        if rate is None:
            raise InvalidArgumentError("a per-task rate is required (--rate or --mu)")
        note = "per-task rate given directly" if self.rate is not None else "lambda = mu, a = alpha"
        return StragglerModel(per_task_rate=rate, per_task_shift=shift or 0.0, calibration_note=note)

    def coefficient_mu(self) -> float:
        """The mu scaling closed-form coefficients (falls back to the per-task rate)."""
        if self.mu is not None:
            return self.mu
        if self.rate is not None:
            return self.rate
        raise InvalidArgumentError("--mu (or --rate) is required for exponent coefficients")
