"""Finishing-time analytics for hierarchical coded computation and its two baselines.

Worker i finishes its j-th coded task at j * T_i. With Delta_s = F_s(t) - F_{s+1}(t) the
probability that a worker has finished exactly s tasks by t, the job finishes by t iff at
least k_j workers have finished j tasks for every layer j. Summing over the nested worker
counts m_1 >= ... >= m_r gives the exact distribution; the memoized form evaluates the same
sum layer by layer in O(r n^2).
"""

import logging
import math
from collections.abc import Callable
from fractions import Fraction
from typing import Literal, NamedTuple

import numpy as np
from mpmath import mp, mpf
from scipy import integrate
from scipy.special import xlogy
from scipy.stats import binom

from strata.config import settings
from strata.errors import InvalidArgumentError, NumericalFailureError
from strata.models.results import BaselineCoefficients, ExponentReport, SummationState
from strata.models.system import LayerAllocation, SchemeId, StragglerModel, SystemShape
from strata.services.straggler import cdf_s_tasks, survival_s_tasks
from strata.utils.numeric import as_fraction, log_binomial, log_binomial_table

logger = logging.getLogger(__name__)

Precision = Literal["double", "extended"]


def _check(alloc: LayerAllocation, shape: SystemShape, t: float) -> None:
    alloc.check_against(shape)
    if t < 0:
        raise InvalidArgumentError(f"time must be nonnegative, got {t}")


def layer_deltas(r: int, m: StragglerModel, t: float) -> np.ndarray:
    """Delta_s for s = 0..r, with F_0 = 1 and F_{r+1} = 0.

    Built from survival probabilities so small differences keep their relative accuracy.
    """
    survival = np.empty(r + 2)
    survival[0] = 0.0
    survival[r + 1] = 1.0
    for s in range(1, r + 1):
        survival[s] = survival_s_tasks(s, t, m)
    deltas = np.diff(survival)
    deltas[r] = cdf_s_tasks(r, t, m)
    return np.clip(deltas, 0.0, None)


def _xlog(count: np.ndarray, log_delta: float) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return np.where(count == 0, 0.0, count * log_delta)


def finishing_cdf_nested(
    alloc: LayerAllocation, shape: SystemShape, m: StragglerModel, t: float
) -> float:
    """Pr(tau <= t) by explicit enumeration of every index vector (m_1, ..., m_r).

    Each term is assembled as a sum of logs and exponentiated once. The enumeration is
    expanded one layer at a time over numpy arrays.
    """
    _check(alloc, shape, t)
    n = shape.n
    deltas = layer_deltas(shape.r, m, t)
    with np.errstate(divide="ignore"):
        log_deltas = np.log(deltas)
    log_c = log_binomial_table(n)

    prev = np.array([n])
    log_acc = np.zeros(1)
    for j, k_j in enumerate(alloc.ks, start=1):
        counts = np.maximum(prev - k_j + 1, 0)
        total = int(counts.sum())
        if total == 0:
            return 0.0
        parent = np.repeat(np.arange(prev.size), counts)
        offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        current = k_j + offsets
        upper = prev[parent]
        log_acc = log_acc[parent] + log_c[upper, current] + _xlog(upper - current, log_deltas[j - 1])
        prev = current
    log_acc = log_acc + _xlog(prev, log_deltas[shape.r])
    return float(np.exp(log_acc).sum())


def transition_matrix(n: int, delta: float) -> np.ndarray:
    """B[m, v] = C(m, v) * delta^(m - v) for v <= m, zero above the diagonal."""
    dropped = np.subtract.outer(np.arange(n + 1), np.arange(n + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_terms = log_binomial_table(n) + xlogy(np.maximum(dropped, 0), delta)
    return np.where(dropped >= 0, np.exp(log_terms), 0.0)


def summation_state(
    alloc: LayerAllocation, shape: SystemShape, m: StragglerModel, t: float
) -> SummationState:
    """Deltas plus the suffix sums H_j(m) for j = r+1 down to 1."""
    _check(alloc, shape, t)
    n, r = shape.n, shape.r
    deltas = layer_deltas(r, m, t)
    v = np.arange(n + 1)
    memo = np.zeros((r + 2, n + 1))
    memo[r + 1] = np.exp(xlogy(v, deltas[r]))
    for j in range(r, 0, -1):
        gated = np.where(v >= alloc.ks[j - 1], memo[j + 1], 0.0)
        memo[j] = transition_matrix(n, deltas[j - 1]) @ gated
    return SummationState(deltas=deltas, memo=memo)


class _ExtendedInputs(NamedTuple):
    deltas: list
    cdfs: list


def _extended_inputs(r: int, m: StragglerModel, t: float) -> _ExtendedInputs:
    t_, rate, shift = mpf(t), mpf(m.rate), mpf(m.shift)

    def survival(s: int):
        return mpf(1) if t_ < s * shift else mp.exp(-rate * (t_ / s - shift))

    def cdf(s: int):
        return mpf(0) if t_ < s * shift else -mp.expm1(-rate * (t_ / s - shift))

    survivals = [mpf(0)] + [survival(s) for s in range(1, r + 1)] + [mpf(1)]
    deltas = [survivals[s + 1] - survivals[s] for s in range(r)] + [cdf(r)]
    cdfs = [mpf(1)] + [cdf(s) for s in range(1, r + 1)]
    return _ExtendedInputs(deltas=deltas, cdfs=cdfs)


def _extended_matvec(binoms: list, delta, vector: list) -> list:
    n = len(vector) - 1
    powers = [delta**d for d in range(n + 1)]
    return [
        mp.fsum(binoms[row][v] * powers[row - v] * vector[v] for v in range(row + 1))
        for row in range(n + 1)
    ]


def _extended_recursion(alloc: LayerAllocation, shape: SystemShape, m, t, failure: bool):
    n, r = shape.n, shape.r
    inputs = _extended_inputs(r, m, t)
    binoms = [[mp.binomial(row, v) for v in range(row + 1)] for row in range(n + 1)]
    if failure:
        vector = [mpf(0)] * (n + 1)
    else:
        vector = [inputs.deltas[r] ** v for v in range(n + 1)]
    for j in range(r, 0, -1):
        k_j = alloc.ks[j - 1]
        if failure:
            gated = [inputs.cdfs[j] ** v if v < k_j else vector[v] for v in range(n + 1)]
        else:
            gated = [vector[v] if v >= k_j else mpf(0) for v in range(n + 1)]
        vector = _extended_matvec(binoms, inputs.deltas[j - 1], gated)
    return vector[n]


def finishing_cdf_dp(
    alloc: LayerAllocation,
    shape: SystemShape,
    m: StragglerModel,
    t: float,
    *,
    precision: Precision = "double",
):
    """Pr(tau <= t) by the layer-by-layer recursion.

    H_{r+1}(v) = Delta_r^v and H_j(m) = sum_{v >= k_j} C(m, v) Delta_{j-1}^(m-v) H_{j+1}(v);
    the answer is H_1(n). `precision="extended"` returns an mpmath number.
    """
    if precision == "extended":
        _check(alloc, shape, t)
        with mp.workdps(settings.extended_dps):
            return _extended_recursion(alloc, shape, m, t, failure=False)
    return summation_state(alloc, shape, m, t).value


def failure_probability(
    alloc: LayerAllocation,
    shape: SystemShape,
    m: StragglerModel,
    t: float,
    *,
    precision: Precision = "double",
):
    """Pr(tau > t) summed directly over the failing index vectors.

    Every term is nonnegative, so deep tails keep their relative accuracy. Extended
    precision only removes the double-precision underflow floor.
    """
    _check(alloc, shape, t)
    if precision == "extended":
        with mp.workdps(settings.extended_dps):
            return _extended_recursion(alloc, shape, m, t, failure=True)

    n, r = shape.n, shape.r
    deltas = layer_deltas(r, m, t)
    v = np.arange(n + 1)
    failing = np.zeros(n + 1)
    for j in range(r, 0, -1):
        reached = np.exp(xlogy(v, cdf_s_tasks(j, t, m)))
        gated = np.where(v < alloc.ks[j - 1], reached, failing)
        failing = transition_matrix(n, deltas[j - 1]) @ gated
    return float(min(failing[n], 1.0))


def layer_completion_probabilities(
    alloc: LayerAllocation, shape: SystemShape, m: StragglerModel, t: float
) -> list[float]:
    """Pr(at least k_j workers finished j tasks by t) for each layer on its own."""
    _check(alloc, shape, t)
    return [
        float(binom.sf(k_j - 1, shape.n, cdf_s_tasks(j, t, m)))
        for j, k_j in enumerate(alloc.ks, start=1)
    ]


class _TailTerm(NamedTuple):
    log_prefactor: float
    rate: float
    shift: float

    def log_value(self, t: float) -> float:
        return self.log_prefactor - self.rate * (t - self.shift)


def _layer_tail_terms(
    alloc: LayerAllocation, shape: SystemShape, m: StragglerModel, shifted: bool = True
) -> list[_TailTerm]:
    terms = []
    for j, k_j in enumerate(alloc.ks, start=1):
        shift = j * m.shift if shifted else 0.0
        terms.append(_TailTerm(log_binomial(shape.n, k_j - 1), m.rate * (shape.n - k_j + 1) / j, shift))
    return terms


def log_failure_tail_asymptotic(
    alloc: LayerAllocation, shape: SystemShape, m: StragglerModel, t: float, *, shifted: bool = True
) -> tuple[float, int]:
    """Log of the dominant layer term and its 1-based layer index."""
    alloc.check_against(shape)
    logs = [term.log_value(t) for term in _layer_tail_terms(alloc, shape, m, shifted)]
    j = int(np.argmax(logs))
    return logs[j], j + 1


def failure_tail_asymptotic(
    alloc: LayerAllocation, shape: SystemShape, m: StragglerModel, t: float, *, shifted: bool = True
) -> float:
    """Large-t approximation max_j C(n, k_j - 1) exp(-rate (n - k_j + 1) t / j).

    With `shifted=True` every layer's exponent uses (t/j - a), the leading term of the
    shifted law; the two forms agree when a = 0.
    """
    if t <= 0:
        raise InvalidArgumentError(f"asymptotic tail needs t > 0, got {t}")
    log_value, _ = log_failure_tail_asymptotic(alloc, shape, m, t, shifted=shifted)
    return math.exp(log_value)


def failure_exponent_slope(
    alloc: LayerAllocation, shape: SystemShape, m: StragglerModel, t: float, dt: float | None = None
) -> float:
    """Finite-difference slope of -log Pr(tau > t) on [t, t + dt], in extended precision."""
    dt = dt if dt is not None else 0.01 * t
    with mp.workdps(settings.extended_dps):
        near = failure_probability(alloc, shape, m, t, precision="extended")
        far = failure_probability(alloc, shape, m, t + dt, precision="extended")
        if near <= 0 or far <= 0:
            raise NumericalFailureError(
                "failure probability vanished; slope undefined", {"t": t, "dt": dt}
            )
        return float((mp.log(near) - mp.log(far)) / dt)


def leading_coefficient(
    alloc: LayerAllocation, shape: SystemShape, mu: Fraction | float | int | str
) -> tuple[Fraction, int]:
    """min_j mu (n - k_j + 1) / j in exact arithmetic, and the first j attaining it."""
    alloc.check_against(shape)
    mu = as_fraction(mu)
    coefficients = [mu * Fraction(shape.n - k_j + 1, j) for j, k_j in enumerate(alloc.ks, start=1)]
    best = min(coefficients)
    return best, coefficients.index(best) + 1


def _lee_success(shape: SystemShape, m: StragglerModel, t: float) -> tuple[int, float]:
    SchemeId.MDS_BASELINE.check_shape(shape)
    return shape.k // shape.r, cdf_s_tasks(shape.r, t, m)


def baseline_lee_cdf(shape: SystemShape, m: StragglerModel, t: float) -> float:
    """Pr(tau_p <= t) for the (n, k/r) MDS code where each worker runs r small tasks."""
    dimension, p = _lee_success(shape, m, t)
    return float(binom.sf(dimension - 1, shape.n, p))


def baseline_lee_failure(shape: SystemShape, m: StragglerModel, t: float) -> float:
    """Pr(tau_p > t) without the 1 - CDF cancellation."""
    dimension, p = _lee_success(shape, m, t)
    return float(binom.cdf(dimension - 1, shape.n, p))


def uncoded_cdf(shape: SystemShape, m: StragglerModel, t: float) -> float:
    """Pr(tau_u <= t): every worker must finish its k/n tasks."""
    SchemeId.UNCODED.check_shape(shape)
    return float(cdf_s_tasks(shape.k // shape.n, t, m) ** shape.n)


def uncoded_failure(shape: SystemShape, m: StragglerModel, t: float) -> float:
    SchemeId.UNCODED.check_shape(shape)
    survival = survival_s_tasks(shape.k // shape.n, t, m)
    if survival >= 1.0:
        return 1.0
    return float(-np.expm1(shape.n * np.log1p(-survival)))


def baseline_coefficients(
    shape: SystemShape, mu: Fraction | float | int | str, *, strict: bool = True
) -> BaselineCoefficients:
    """L_p = mu (n - k/r + 1) / r and L_u = mu n / k.

    With `strict=False` a coefficient whose divisibility condition fails is left None.
    """
    mu = as_fraction(mu)
    lee = uncoded = None
    try:
        SchemeId.MDS_BASELINE.check_shape(shape)
        lee = mu * Fraction(shape.n - shape.k // shape.r + 1, shape.r)
    except InvalidArgumentError:
        if strict:
            raise
    try:
        SchemeId.UNCODED.check_shape(shape)
        uncoded = mu * Fraction(shape.n, shape.k)
    except InvalidArgumentError:
        if strict:
            raise
    return BaselineCoefficients(L_p=lee, L_u=uncoded)


def exponent_report(
    alloc: LayerAllocation, shape: SystemShape, mu: Fraction | float | int | str
) -> ExponentReport:
    """L for the allocation next to whichever baseline coefficients are defined."""
    coefficient, layer = leading_coefficient(alloc, shape, mu)
    baselines = baseline_coefficients(shape, mu, strict=False)
    return ExponentReport(
        k=shape.k,
        r=shape.r,
        L=coefficient,
        L_p=baselines.L_p,
        L_u=baselines.L_u,
        argmin_layer=layer,
    )


class _SurvivalCurve(NamedTuple):
    survival: Callable[[float], float]
    floor: float
    tail: list[_TailTerm]
    kinks: list[float]


def _survival_curve(
    target: LayerAllocation | SchemeId, shape: SystemShape, m: StragglerModel
) -> _SurvivalCurve:
    if isinstance(target, LayerAllocation):
        target.check_against(shape)
        return _SurvivalCurve(
            survival=lambda t: failure_probability(target, shape, m, t),
            floor=shape.r * m.shift,
            tail=_layer_tail_terms(target, shape, m),
            kinks=[j * m.shift for j in range(1, shape.r + 1)],
        )
    if target is SchemeId.MDS_BASELINE:
        SchemeId.MDS_BASELINE.check_shape(shape)
        dimension = shape.k // shape.r
        rate = m.rate * (shape.n - dimension + 1) / shape.r
        return _SurvivalCurve(
            survival=lambda t: baseline_lee_failure(shape, m, t),
            floor=shape.r * m.shift,
            tail=[_TailTerm(log_binomial(shape.n, dimension - 1), rate, shape.r * m.shift)],
            kinks=[],
        )
    if target is SchemeId.UNCODED:
        SchemeId.UNCODED.check_shape(shape)
        per_worker = shape.k // shape.n
        return _SurvivalCurve(
            survival=lambda t: uncoded_failure(shape, m, t),
            floor=per_worker * m.shift,
            tail=[_TailTerm(math.log(shape.n), m.rate / per_worker, per_worker * m.shift)],
            kinks=[],
        )
    raise InvalidArgumentError("the hierarchical scheme needs its LayerAllocation")


def expected_finishing_time(
    target: LayerAllocation | SchemeId, shape: SystemShape, m: StragglerModel
) -> float:
    """E[tau] = floor + integral of Pr(tau > t) over [floor, T_cut] + analytic tail.

    The survival is 1 below the floor (r a for the layered schemes). T_cut is where the
    asymptotic tail drops below `settings.tail_cutoff`; the remainder is the integral of
    the asymptotic terms.
    """
    curve = _survival_curve(target, shape, m)
    log_cutoff = math.log(settings.tail_cutoff)
    t_cut = max(
        [curve.floor]
        + [term.shift + (term.log_prefactor - log_cutoff) / term.rate for term in curve.tail]
    )
    points = [p for p in curve.kinks if curve.floor < p < t_cut] or None
    result = integrate.quad(
        curve.survival,
        curve.floor,
        t_cut,
        points=points,
        epsabs=settings.quad_epsabs,
        epsrel=settings.quad_epsrel,
        limit=settings.quad_limit,
        full_output=1,
    )
    body, abserr = result[0], result[1]
    if len(result) > 3:
        diagnostics = {
            "message": result[3],
            "abserr": abserr,
            "interval": (curve.floor, t_cut),
            "evaluations": result[2].get("neval"),
        }
        if not math.isfinite(body) or abserr > 1e-5 * max(abs(body), 1.0):
            raise NumericalFailureError("expected finishing time did not converge", diagnostics)
        logger.warning(f"Quadrature warning accepted within tolerance: {diagnostics}")
    tail = sum(math.exp(term.log_value(t_cut)) / term.rate for term in curve.tail)
    logger.debug(f"E[tau]: floor={curve.floor:g} body={body:.10g} tail={tail:.3g} t_cut={t_cut:.4g}")
    return curve.floor + body + tail


def scheme_tail_asymptotic(
    target: LayerAllocation | SchemeId, shape: SystemShape, m: StragglerModel, t: float
) -> float:
    """Leading-order Pr(tau > t) for an allocation or either baseline (shifted form)."""
    if t <= 0:
        raise InvalidArgumentError(f"asymptotic tail needs t > 0, got {t}")
    curve = _survival_curve(target, shape, m)
    return math.exp(max(term.log_value(t) for term in curve.tail))


def curve_point(
    scheme: SchemeId,
    shape: SystemShape,
    alloc: LayerAllocation | None,
    m: StragglerModel,
    t: float,
) -> tuple[float, float, float, float | None]:
    """(t, Pr(tau <= t), Pr(tau > t), asymptotic tail) for one scheme; no tail at t = 0."""
    if scheme is SchemeId.HIERARCHICAL:
        if alloc is None:
            raise InvalidArgumentError("the hierarchical scheme needs its LayerAllocation")
        cdf = finishing_cdf_dp(alloc, shape, m, t)
        tail = failure_probability(alloc, shape, m, t)
        target: LayerAllocation | SchemeId = alloc
    elif scheme is SchemeId.MDS_BASELINE:
        cdf = baseline_lee_cdf(shape, m, t)
        tail = baseline_lee_failure(shape, m, t)
        target = scheme
    else:
        cdf = uncoded_cdf(shape, m, t)
        tail = uncoded_failure(shape, m, t)
        target = scheme
    asymptotic = scheme_tail_asymptotic(target, shape, m, t) if t > 0 else None
    return t, cdf, tail, asymptotic
