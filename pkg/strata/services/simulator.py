"""Monte Carlo finishing times from order statistics of per-worker task durations."""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from strata.config import settings
from strata.errors import InvalidArgumentError
from strata.models.results import MonteCarloReport, TrialResult, WorkerTimes
from strata.models.system import LayerAllocation, SchemeId, StragglerModel, SystemShape
from strata.services.straggler import sample_single_task_time, worker_rng

logger = logging.getLogger(__name__)


def sample_worker_times(m: StragglerModel, n: int, seed: int) -> WorkerTimes:
    """One T_i per worker, each drawn from its own stream derived from (seed, i)."""
    return WorkerTimes(
        t_i=tuple(float(sample_single_task_time(m, worker_rng(seed, i))) for i in range(n)),
        shift=m.shift,
    )


def sample_layer_done_per_task(m: StragglerModel, n: int, r: int, seed: int) -> np.ndarray:
    """n x r finish times when every task draws its own duration.

    Worker i finishes layer j at the sum of its first j draws. A sensitivity mode only;
    the finishing-time analysis assumes one duration per worker.
    """
    rows = [np.cumsum(sample_single_task_time(m, worker_rng(seed, i), size=r)) for i in range(n)]
    return np.array(rows)


def _check_times(alloc: LayerAllocation, times: WorkerTimes) -> None:
    if max(alloc.ks) > times.n:
        raise InvalidArgumentError(f"allocation {alloc.ks} needs more than n={times.n} workers")
    if not alloc.is_nonincreasing():
        raise InvalidArgumentError(f"allocation {alloc.ks} must be nonincreasing")


def simulate_tau(alloc: LayerAllocation, times: WorkerTimes) -> TrialResult:
    """Layer j is done at j * T_(k_j), the k_j-th smallest duration scaled by j."""
    _check_times(alloc, times)
    ordered = np.sort(times.t_i)
    done = tuple(float(j * ordered[k_j - 1]) for j, k_j in enumerate(alloc.ks, start=1))
    return TrialResult(tau=max(done), per_layer_done=done, scheme=SchemeId.HIERARCHICAL)


def simulate_tau_per_task(alloc: LayerAllocation, layer_done: np.ndarray) -> TrialResult:
    """Finishing time from an n x r matrix of per-worker layer completion times."""
    done = tuple(
        float(np.sort(layer_done[:, j])[k_j - 1]) for j, k_j in enumerate(alloc.ks)
    )
    return TrialResult(tau=max(done), per_layer_done=done, scheme=SchemeId.HIERARCHICAL)


def simulate_baseline_tau(shape: SystemShape, times: WorkerTimes, scheme: SchemeId) -> TrialResult:
    """tau_p = r * T_(k/r) for the (n, k/r) code; tau_u = (k/n) * max_i T_i uncoded."""
    if times.n != shape.n:
        raise InvalidArgumentError(f"got {times.n} worker times for n={shape.n}")
    scheme.check_shape(shape)
    ordered = np.sort(times.t_i)
    if scheme is SchemeId.MDS_BASELINE:
        tau = float(shape.r * ordered[shape.k // shape.r - 1])
    elif scheme is SchemeId.UNCODED:
        tau = float(shape.k // shape.n * ordered[-1])
    else:
        raise InvalidArgumentError("use simulate_tau for the hierarchical scheme")
    return TrialResult(tau=tau, per_layer_done=(tau,), scheme=scheme)


def _chunk_taus(
    scheme: SchemeId,
    shape: SystemShape,
    alloc: LayerAllocation | None,
    m: StragglerModel,
    trials: int,
    seed: np.random.SeedSequence,
    per_task_draws: bool,
) -> np.ndarray:
    """Vectorized finishing times of one chunk of trials."""
    rng = np.random.default_rng(seed)
    n = shape.n
    if scheme is SchemeId.HIERARCHICAL and per_task_draws:
        draws = m.shift + rng.exponential(1.0 / m.rate, size=(trials, n, shape.r))
        finished = np.cumsum(draws, axis=2)
        layers = [
            np.sort(finished[:, :, j], axis=1)[:, k_j - 1] for j, k_j in enumerate(alloc.ks)
        ]
        return np.max(layers, axis=0)

    ordered = np.sort(m.shift + rng.exponential(1.0 / m.rate, size=(trials, n)), axis=1)
    if scheme is SchemeId.HIERARCHICAL:
        layers = [j * ordered[:, k_j - 1] for j, k_j in enumerate(alloc.ks, start=1)]
        return np.max(layers, axis=0)
    if scheme is SchemeId.MDS_BASELINE:
        return shape.r * ordered[:, shape.k // shape.r - 1]
    return shape.k // shape.n * ordered[:, -1]


def run_monte_carlo(
    scheme: SchemeId,
    shape: SystemShape,
    m: StragglerModel,
    trials: int,
    seed: int,
    *,
    alloc: LayerAllocation | None = None,
    t_grid: tuple[float, ...] = (),
    per_task_draws: bool = False,
    return_samples: bool = False,
) -> MonteCarloReport | tuple[MonteCarloReport, np.ndarray]:
    """Empirical mean and CDF of the finishing time with standard errors.

    Trials are split into chunks of `settings.chunk_size`; chunk c draws from the c-th child
    of SeedSequence(seed), so the output depends only on (seed, trials, chunk_size). Chunks
    run on up to `settings.threads` threads and are reduced in chunk order.
    """
    if trials < 1:
        raise InvalidArgumentError(f"trials must be at least 1, got {trials}")
    if scheme is SchemeId.HIERARCHICAL:
        if alloc is None:
            raise InvalidArgumentError("the hierarchical scheme needs its allocation")
        alloc.check_against(shape)
    else:
        scheme.check_shape(shape)

    sizes = [settings.chunk_size] * (trials // settings.chunk_size)
    if trials % settings.chunk_size:
        sizes.append(trials % settings.chunk_size)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    logger.info(
        f"Monte Carlo {scheme}: {trials} trials in {len(sizes)} chunks on {settings.threads} threads"
    )

    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        chunks = list(
            pool.map(
                lambda job: _chunk_taus(scheme, shape, alloc, m, job[0], job[1], per_task_draws),
                zip(sizes, seeds, strict=True),
            )
        )

    grid = np.asarray(t_grid, dtype=float)
    total = 0.0
    total_sq = 0.0
    below = np.zeros(grid.size)
    for taus in chunks:
        total += float(taus.sum())
        total_sq += float(np.square(taus).sum())
        below += (taus[:, None] <= grid[None, :]).sum(axis=0)

    mean = total / trials
    variance = max(total_sq / trials - mean * mean, 0.0)
    stderr = float(np.sqrt(variance / trials)) if trials > 1 else 0.0
    cdf = below / trials
    report = MonteCarloReport(
        scheme=scheme,
        trials=trials,
        seed=seed,
        mean=mean,
        mean_stderr=stderr,
        t_grid=tuple(float(t) for t in grid),
        cdf=tuple(float(p) for p in cdf),
        cdf_stderr=tuple(float(s) for s in np.sqrt(cdf * (1.0 - cdf) / trials)),
    )
    if return_samples:
        return report, np.concatenate(chunks)
    return report


def sample_trials(
    scheme: SchemeId,
    shape: SystemShape,
    m: StragglerModel,
    trials: int,
    seed: int,
    alloc: LayerAllocation | None = None,
) -> list[TrialResult]:
    """Individual trials for dumps; trial c draws from the c-th child of SeedSequence(seed)."""
    if scheme is SchemeId.HIERARCHICAL and alloc is None:
        raise InvalidArgumentError("the hierarchical scheme needs its allocation")
    results = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        draws = sample_single_task_time(m, np.random.default_rng(child), size=shape.n)
        times = WorkerTimes(t_i=tuple(float(t) for t in draws), shift=m.shift)
        if scheme is SchemeId.HIERARCHICAL:
            results.append(simulate_tau(alloc, times))
        else:
            results.append(simulate_baseline_tau(shape, times, scheme))
    return results
