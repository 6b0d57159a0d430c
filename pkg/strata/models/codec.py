"""Linear job, layer plan and code generator schemas."""

import itertools
from typing import Literal

import galois
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from strata.config import settings
from strata.models.system import LayerAllocation


class LinearJob(BaseModel):
    """The job g(x) = A x: a q x d matrix and a length-d input vector."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray
    input: np.ndarray

    @field_validator("matrix")
    @classmethod
    def _two_dimensional(cls, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix)
        if matrix.ndim != 2 or 0 in matrix.shape:
            raise ValueError(f"matrix must be a non-empty 2-D array, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix entries must be finite")
        return matrix

    @field_validator("input")
    @classmethod
    def _one_dimensional(cls, vector: np.ndarray) -> np.ndarray:
        vector = np.asarray(vector).reshape(-1)
        if not np.all(np.isfinite(vector)):
            raise ValueError("input entries must be finite")
        return vector

    @model_validator(mode="after")
    def _conformable(self) -> "LinearJob":
        if self.matrix.shape[1] != self.input.shape[0]:
            raise ValueError(
                f"matrix has {self.matrix.shape[1]} columns but input has length {self.input.shape[0]}"
            )
        return self

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    def direct(self) -> np.ndarray:
        """The uncoded product A x."""
        return self.matrix @ self.input


class LayerPlan(BaseModel):
    """Which task indices form each layer g^j."""

    model_config = ConfigDict(frozen=True)

    assignments: tuple[tuple[int, ...], ...]
    alloc: LayerAllocation

    @model_validator(mode="after")
    def _partitions_tasks(self) -> "LayerPlan":
        if len(self.assignments) != self.alloc.r:
            raise ValueError(f"plan has {len(self.assignments)} layers, allocation has {self.alloc.r}")
        for j, (tasks, k_j) in enumerate(zip(self.assignments, self.alloc.ks, strict=True), start=1):
            if len(tasks) != k_j:
                raise ValueError(f"layer {j} holds {len(tasks)} tasks, allocation says {k_j}")
        flat = sorted(i for tasks in self.assignments for i in tasks)
        if flat != list(range(self.alloc.k)):
            raise ValueError("layers must partition the task indices 0..k-1")
        return self

    @classmethod
    def contiguous(cls, alloc: LayerAllocation) -> "LayerPlan":
        """Layer 1 gets tasks 0..k_1-1, layer 2 the next k_2, and so on."""
        assignments = []
        start = 0
        for k_j in alloc.ks:
            assignments.append(tuple(range(start, start + k_j)))
            start += k_j
        return cls(assignments=tuple(assignments), alloc=alloc)

    @property
    def k(self) -> int:
        return self.alloc.k


class GeneratorSpec(BaseModel):
    """MDS generator: Gaussian over the reals, polynomial evaluation at `nodes` over GF(p)."""

    model_config = ConfigDict(frozen=True)

    mode: Literal["real", "prime"] = "real"
    nodes: tuple[int, ...]
    systematic: bool = True
    modulus: int = Field(default=settings.prime_modulus, ge=2)
    # Explicit integer generator (one row per worker); overrides the node construction
    matrix: tuple[tuple[int, ...], ...] | None = None

    @model_validator(mode="after")
    def _valid_nodes(self) -> "GeneratorSpec":
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"evaluation nodes must be pairwise distinct, got {self.nodes}")
        if self.mode == "prime":
            if not galois.is_prime(self.modulus):
                raise ValueError(f"modulus {self.modulus} is not prime")
            if self.modulus <= self.n:
                raise ValueError(f"modulus {self.modulus} must exceed n={self.n}")
            if any(not 0 <= x < self.modulus for x in self.nodes):
                raise ValueError("prime-field nodes must lie in [0, modulus)")
        if self.matrix is not None:
            self._check_explicit()
        return self

    def _check_explicit(self) -> None:
        rows = np.array(self.matrix, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != self.n:
            raise ValueError(f"explicit generator needs one row per worker (n={self.n})")
        width = rows.shape[1]
        for subset in itertools.combinations(range(self.n), width):
            if np.linalg.matrix_rank(rows[list(subset)]) < width:
                raise ValueError(f"explicit generator is not MDS: rows {subset} are singular")

    @classmethod
    def for_workers(
        cls, n: int, mode: Literal["real", "prime"] = "real", systematic: bool = True
    ) -> "GeneratorSpec":
        """Nodes 0..n-1, one per worker."""
        return cls(mode=mode, nodes=tuple(range(n)), systematic=systematic)

    @property
    def n(self) -> int:
        return len(self.nodes)


class EncodedTask(BaseModel):
    """Coded task h^j_i held by worker i for layer j (both 0-based)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    layer: int = Field(ge=0)
    worker: int = Field(ge=0)
    payload: np.ndarray


class DecodeTiming(BaseModel):
    """Mean wall time to decode one layer of dimension k."""

    k: int
    seconds: float


class DecodeBenchmark(BaseModel):
    """Decode cost versus layer dimension, plus serial versus concurrent layers."""

    mode: str
    timings: list[DecodeTiming]
    fitted_exponent: float | None = None
    serial_seconds: float | None = None
    concurrent_seconds: float | None = None
    note: str = ""
