"""Layer allocation: maximin failure exponent, exact probability maximization, r selection."""

import logging
import math
from collections.abc import Callable, Iterator
from fractions import Fraction

import numpy as np
from cachetools import LRUCache, cached
from pydantic import ValidationError
from scipy.special import xlogy

from strata.config import settings
from strata.errors import InvalidArgumentError, SearchSpaceTooLargeError
from strata.models.allocation import MaximinSolution, maximin_objective
from strata.models.system import LayerAllocation, StragglerModel, SystemShape
from strata.services.analysis import finishing_cdf_dp, layer_deltas, transition_matrix
from strata.services.straggler import survival_s_tasks

logger = logging.getLogger(__name__)


def _layer_cap(shape: SystemShape, stragglers: int) -> int:
    """Per-layer upper bound n - S, after checking the instance is feasible."""
    if stragglers < 0:
        raise InvalidArgumentError(f"straggler margin S must be nonnegative, got {stragglers}")
    cap = shape.n - stragglers
    if cap < 1:
        raise InvalidArgumentError(f"straggler margin S={stragglers} must be below n={shape.n}")
    if shape.k > shape.r * cap:
        raise InvalidArgumentError(
            f"k={shape.k} exceeds r*(n-S)={shape.r * cap}; no allocation fits"
        )
    return cap


@cached(LRUCache(maxsize=65536))
def _count(remaining: int, layers: int, upper: int) -> int:
    if layers == 0:
        return int(remaining == 0)
    low = -(-remaining // layers)
    high = min(upper, remaining - layers + 1)
    return sum(_count(remaining - v, layers - 1, v) for v in range(low, high + 1))


def count_allocations(cap: int, k: int, r: int) -> int:
    """Number of nonincreasing compositions of k into r parts, each in [1, cap]."""
    return _count(k, r, cap)


def enumerate_allocations(
    cap: int, k: int, r: int, prefix_ok: Callable[[tuple[int, ...]], bool] | None = None
) -> Iterator[tuple[int, ...]]:
    """Nonincreasing compositions of k into r parts in [1, cap], lexicographically descending.

    `prefix_ok` is consulted on every partial allocation; returning False skips the subtree.
    """

    def extend(prefix: tuple[int, ...], remaining: int, upper: int) -> Iterator[tuple[int, ...]]:
        layers = r - len(prefix)
        if layers == 0:
            yield prefix
            return
        low = -(-remaining // layers)
        for v in range(min(upper, remaining - layers + 1), low - 1, -1):
            candidate = prefix + (v,)
            if prefix_ok is None or prefix_ok(candidate):
                yield from extend(candidate, remaining - v, v)

    yield from extend((), k, cap)


def _caps_at(n: int, r: int, cap: int, z: Fraction) -> list[int]:
    return [min(cap, math.floor(n + 1 - j * z)) for j in range(1, r + 1)]


@cached(LRUCache(maxsize=1024))
def _maximin_ks(n: int, k: int, r: int, cap: int) -> tuple[int, ...]:
    candidates = sorted({Fraction(n - v + 1, j) for v in range(1, n + 1) for j in range(1, r + 1)})

    def feasible(z: Fraction) -> bool:
        caps = _caps_at(n, r, cap, z)
        return caps[-1] >= 1 and sum(caps) >= k

    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if feasible(candidates[mid]):
            lo = mid
        else:
            hi = mid - 1

    ks = _caps_at(n, r, cap, candidates[lo])
    excess = sum(ks) - k
    for j in range(r - 1, -1, -1):
        if excess == 0:
            break
        cut = min(excess, ks[j] - 1)
        ks[j] -= cut
        excess -= cut
    return tuple(ks)


def optimize_maximin(shape: SystemShape, stragglers: int = 0) -> MaximinSolution:
    """Maximize z = min_j (n - k_j + 1) / j with every k_j <= n - S.

    The optimum is one of the finitely many values (n - v + 1) / j. Binary search over
    them finds the largest z whose per-layer caps floor(n + 1 - j z) still reach k; the
    caps are then trimmed from the deepest layer upward until they sum to k.
    """
    cap = _layer_cap(shape, stragglers)
    ks = _maximin_ks(shape.n, shape.k, shape.r, cap)
    return MaximinSolution(
        n=shape.n,
        ks=LayerAllocation(ks=ks),
        z=maximin_objective(shape.n, ks),
        straggler_margin=stragglers,
    )


def select_r(
    n: int, k: int, r_max: int | None = None, stragglers: int = 0
) -> tuple[int, MaximinSolution]:
    """Sweep r = 1..min(r_max, k) and keep the largest z; ties go to the smallest r.

    Every allocation over r layers has z <= n / r, so the sweep stops once that bound
    drops below the incumbent.
    """
    r_max = k if r_max is None else r_max
    if r_max < 1:
        raise InvalidArgumentError(f"r_max must be at least 1, got {r_max}")
    try:
        SystemShape(n=n, k=k, r=1)
    except ValidationError as exc:
        raise InvalidArgumentError(str(exc)) from exc

    best: MaximinSolution | None = None
    for r in range(1, min(r_max, k) + 1):
        if best is not None and Fraction(n, r) < best.z:
            break
        shape = SystemShape(n=n, k=k, r=r)
        if k > r * (n - stragglers):
            continue
        solution = optimize_maximin(shape, stragglers)
        if best is None or solution.z > best.z:
            best = solution
    if best is None:
        raise InvalidArgumentError(
            f"no r <= {min(r_max, k)} admits k={k} with n={n}, S={stragglers}"
        )
    logger.info(f"select_r(n={n}, k={k}): r={best.r}, ks={best.ks.ks}, z={best.z}")
    return best.r, best


def brute_force_maximin(shape: SystemShape, stragglers: int = 0) -> MaximinSolution:
    """Exhaustive maximin over every monotone composition; the optimizer's test oracle.

    Branches whose partial objective already falls to the incumbent are skipped, since
    later layers can only lower the minimum.
    """
    cap = _layer_cap(shape, stragglers)
    space = count_allocations(cap, shape.k, shape.r)
    if space > settings.brute_force_limit:
        raise SearchSpaceTooLargeError(
            f"{space} compositions exceed the oracle limit {settings.brute_force_limit}"
        )

    n = shape.n
    best_z: Fraction | None = None
    best_ks: tuple[int, ...] | None = None

    def promising(prefix: tuple[int, ...]) -> bool:
        return best_z is None or maximin_objective(n, prefix) > best_z

    for ks in enumerate_allocations(cap, shape.k, shape.r, promising):
        z = maximin_objective(n, ks)
        if best_z is None or z > best_z:
            best_z, best_ks = z, ks
    return MaximinSolution(
        n=n, ks=LayerAllocation(ks=best_ks), z=best_z, straggler_margin=stragglers
    )


def optimize_exact(shape: SystemShape, m: StragglerModel, t: float) -> LayerAllocation:
    """Allocation maximizing Pr(tau <= t) over all nonincreasing compositions.

    Depth-first from the deepest layer up so sibling allocations share suffix sums. The
    maximin allocation seeds the incumbent. No completion of a suffix k_j..k_r beats the
    probability that layers j..r finish on their own, so subtrees whose suffix probability
    falls below the incumbent are skipped. Ties go to the lexicographically
    largest ks.
    """
    if t <= 0:
        raise InvalidArgumentError(f"optimize_exact needs t > 0, got {t}")
    cap = _layer_cap(shape, 0)
    n, k, r = shape.n, shape.k, shape.r

    incumbent = optimize_maximin(shape).ks
    best_value = finishing_cdf_dp(incumbent, shape, m, t)
    best_ks = incumbent.ks

    deltas = layer_deltas(r, m, t)
    transitions = [transition_matrix(n, deltas[j - 1]) for j in range(1, r + 1)]
    # row n of the transition whose drop probability is Pr(fewer than j - 1 tasks)
    escape = [transition_matrix(n, survival_s_tasks(j - 1, t, m))[n] for j in range(2, r + 1)]
    v = np.arange(n + 1)
    base = np.exp(xlogy(v, deltas[r]))

    def descend(j: int, suffix: tuple[int, ...], memo: np.ndarray, remaining: int) -> None:
        # suffix holds k_{j+1}..k_r; choose k_j >= k_{j+1}
        nonlocal best_value, best_ks
        low = suffix[0] if suffix else 1
        layers_above = j - 1
        for k_j in range(low, min(cap, remaining) + 1):
            rest = remaining - k_j
            if rest < layers_above * k_j or rest > layers_above * cap:
                continue
            current = transitions[j - 1] @ np.where(v >= k_j, memo, 0.0)
            if j == 1:
                value = float(current[n])
                ks = (k_j, *suffix)
                if value > best_value or (value == best_value and ks > best_ks):
                    best_value, best_ks = value, ks
                continue
            if float(escape[j - 2] @ current) < best_value:
                continue
            descend(j - 1, (k_j, *suffix), current, rest)

    descend(r, (), base, k)
    logger.info(f"optimize_exact(n={n}, k={k}, r={r}, t={t}): ks={best_ks}, P={best_value:.6g}")
    return LayerAllocation(ks=best_ks)


def resolve_allocation(
    n: int | None,
    k: int | None = None,
    r: int | None = None,
    ks: tuple[int, ...] | None = None,
    stragglers: int = 0,
) -> tuple[SystemShape, LayerAllocation]:
    """Shape and allocation from whatever the caller pinned.

    An explicit `ks` is checked as given; otherwise maximin for a fixed r, or select_r.
    """
    if n is None:
        raise InvalidArgumentError("n is required")
    try:
        if ks is not None:
            alloc = LayerAllocation(ks=ks)
            shape = SystemShape(n=n, k=k or alloc.k, r=r or alloc.r)
            alloc.check_against(shape, cap=n - stragglers)
            return shape, alloc
        if k is None:
            raise InvalidArgumentError("k is required")
        if r is None:
            r, solution = select_r(n, k, stragglers=stragglers)
            return SystemShape(n=n, k=k, r=r), solution.ks
        shape = SystemShape(n=n, k=k, r=r)
    except ValidationError as exc:
        raise InvalidArgumentError(str(exc)) from exc
    return shape, optimize_maximin(shape, stragglers).ks
