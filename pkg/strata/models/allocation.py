"""Allocation optimizer schemas."""

from fractions import Fraction

from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator

from strata.models.system import LayerAllocation


def maximin_objective(n: int, ks: tuple[int, ...]) -> Fraction:
    """Exact min_j (n - k_j + 1) / j over 1-based layers."""
    return min(Fraction(n - k_j + 1, j) for j, k_j in enumerate(ks, start=1))


class MaximinSolution(BaseModel):
    """Allocation maximizing the smallest scaled failure-exponent coefficient."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(ge=1)
    ks: LayerAllocation
    z: Fraction
    straggler_margin: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _objective_matches(self) -> "MaximinSolution":
        if self.z != maximin_objective(self.n, self.ks.ks):
            raise ValueError(f"z={self.z} does not match allocation {self.ks.ks}")
        if max(self.ks.ks) > self.n - self.straggler_margin:
            raise ValueError(f"allocation {self.ks.ks} is not robust to {self.straggler_margin} stragglers")
        return self

    @field_serializer("z")
    def _serialize_z(self, z: Fraction) -> dict[str, int]:
        return {"numerator": z.numerator, "denominator": z.denominator}

    @property
    def r(self) -> int:
        return self.ks.r
