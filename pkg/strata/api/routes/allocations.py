"""Allocation API routes."""

from fastapi import APIRouter

from strata.models.allocation import MaximinSolution, maximin_objective
from strata.models.requests import AllocationResponse, ExactRequest, MaximinRequest, SelectRRequest
from strata.services import allocator
from strata.services.analysis import finishing_cdf_dp

router = APIRouter()


def _response(solution: MaximinSolution, probability: float | None = None) -> AllocationResponse:
    return AllocationResponse(
        r=solution.r,
        ks=solution.ks.ks,
        z=solution.model_dump()["z"],
        z_float=float(solution.z),
        straggler_margin=solution.straggler_margin,
        finishing_probability=probability,
    )


@router.post("/maximin", response_model=AllocationResponse)
def maximin(data: MaximinRequest):
    """Maximin allocation for a fixed number of layers."""
    shape, alloc = allocator.resolve_allocation(data.n, data.k, data.r, None, data.stragglers)
    z = maximin_objective(shape.n, alloc.ks)
    return _response(MaximinSolution(n=shape.n, ks=alloc, z=z, straggler_margin=data.stragglers))


@router.post("/select-r", response_model=AllocationResponse)
def select_r(data: SelectRRequest):
    """Sweep r and return the best maximin allocation."""
    _, solution = allocator.select_r(data.n, data.k, data.r_max, data.stragglers)
    return _response(solution)


@router.post("/exact", response_model=AllocationResponse)
def exact(data: ExactRequest):
    """Allocation maximizing Pr(tau <= t)."""
    shape, _ = allocator.resolve_allocation(data.n, data.k, data.r, None, data.stragglers)
    m = data.straggler_model()
    alloc = allocator.optimize_exact(shape, m, data.t)
    solution = MaximinSolution(n=shape.n, ks=alloc, z=maximin_objective(shape.n, alloc.ks))
    return _response(solution, finishing_cdf_dp(alloc, shape, m, data.t))
