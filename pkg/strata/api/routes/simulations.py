"""Simulation API routes."""

import numpy as np
from fastapi import APIRouter

from strata.config import settings
from strata.models.codec import GeneratorSpec, LayerPlan, LinearJob
from strata.models.requests import HarnessRequest, MonteCarloRequest
from strata.models.results import MonteCarloReport
from strata.services.allocator import resolve_allocation
from strata.services.harness import run_execution_harness
from strata.services.simulator import run_monte_carlo

router = APIRouter()


@router.post("/monte-carlo", response_model=MonteCarloReport)
def monte_carlo(data: MonteCarloRequest):
    """Empirical finishing-time CDF and mean."""
    shape, alloc = resolve_allocation(data.n, data.k, data.r, data.ks, data.stragglers)
    return run_monte_carlo(
        data.scheme,
        shape,
        data.straggler_model(),
        data.trials,
        settings.default_seed if data.seed is None else data.seed,
        alloc=alloc,
        t_grid=tuple(data.t_grid),
        per_task_draws=data.per_task_draws,
    )


@router.post("/harness")
def harness(data: HarnessRequest) -> dict:
    """Run a random integer job through the coded execution harness."""
    shape, alloc = resolve_allocation(data.n, data.k, data.r, data.ks, data.stragglers)
    seed = settings.default_seed if data.seed is None else data.seed
    rng = np.random.default_rng(seed)
    job = LinearJob(
        matrix=rng.integers(-9, 10, size=(shape.k * data.rows_per_task, data.cols)),
        input=rng.integers(-9, 10, size=data.cols),
    )
    report = run_execution_harness(
        job,
        LayerPlan.contiguous(alloc),
        GeneratorSpec.for_workers(shape.n, mode=data.field),
        data.straggler_model(),
        seed,
        crashes=data.crashes,
        deadline=data.deadline,
    )
    return {
        **report.model_dump(mode="json"),
        "ks": list(alloc.ks),
        "direct_output": job.direct().tolist(),
    }
