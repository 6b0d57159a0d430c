"""Finishing-time analysis API routes."""

from fastapi import APIRouter

from strata.models.requests import (
    CurvePoint,
    CurveRequest,
    CurveResponse,
    ExpectedResponse,
    ExponentsRequest,
    SystemRequest,
)
from strata.models.results import ExponentReport
from strata.models.system import SchemeId
from strata.services import analysis
from strata.services.allocator import resolve_allocation

router = APIRouter()


@router.post("/cdf", response_model=CurveResponse)
def cdf(data: CurveRequest):
    """Pr(tau <= t), Pr(tau > t) and the asymptotic tail on a time grid."""
    shape, alloc = resolve_allocation(data.n, data.k, data.r, data.ks, data.stragglers)
    m = data.straggler_model()
    points = []
    for t in data.t_grid:
        _, value, tail, asymptotic = analysis.curve_point(data.scheme, shape, alloc, m, t)
        points.append(CurvePoint(t=t, cdf=value, tail=tail, asymptotic_tail=asymptotic))
    return CurveResponse(scheme=data.scheme, ks=alloc.ks, points=points)


@router.post("/expected", response_model=ExpectedResponse)
def expected(data: SystemRequest):
    """Expected finishing time of the requested scheme."""
    shape, alloc = resolve_allocation(data.n, data.k, data.r, data.ks, data.stragglers)
    target = alloc if data.scheme is SchemeId.HIERARCHICAL else data.scheme
    value = analysis.expected_finishing_time(target, shape, data.straggler_model())
    return ExpectedResponse(scheme=data.scheme, ks=alloc.ks, expected_time=value)


@router.post("/exponents")
def exponents(data: ExponentsRequest) -> dict:
    """Leading coefficients L, L_p, L_u; undefined baselines are null."""
    shape, alloc = resolve_allocation(data.n, data.k, data.r)
    report: ExponentReport = analysis.exponent_report(alloc, shape, data.mu)
    ratio = report.ratio
    return {**report.model_dump(), "ks": list(alloc.ks), "ratio": None if ratio is None else float(ratio)}
