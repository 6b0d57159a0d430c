"""Straggler delay law - the shifted-exponential model of per-task durations.

A worker's single small task takes T = a + Exp(rate). Completing s tasks takes s * T,
so F_s(t) = Pr(s T <= t) = 1 - exp(-rate (t/s - a)) for t >= s a and 0 before that.
"""

import numpy as np

from strata.errors import InvalidArgumentError
from strata.models.system import StragglerModel


def _check_task_count(s: int) -> None:
    if s < 1:
        raise InvalidArgumentError(f"task count s must be a positive integer, got {s}")


def survival_s_tasks(s: int, t, m: StragglerModel):
    """Pr(worker has NOT finished s tasks by t) = 1 - F_s(t), without cancellation."""
    _check_task_count(s)
    t_arr = np.asarray(t, dtype=float)
    exponent = -m.rate * (t_arr / s - m.shift)
    result = np.where(t_arr < s * m.shift, 1.0, np.exp(np.minimum(exponent, 0.0)))
    return float(result) if result.ndim == 0 else result


def cdf_s_tasks(s: int, t, m: StragglerModel):
    """F_s(t): probability a worker has finished s tasks by time t.

    Accepts scalar or array `t`; nondecreasing in t and nonincreasing in s.
    """
    _check_task_count(s)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InvalidArgumentError("time must be nonnegative")
    exponent = -m.rate * (t_arr / s - m.shift)
    result = np.where(t_arr < s * m.shift, 0.0, -np.expm1(np.minimum(exponent, 0.0)))
    return float(result) if result.ndim == 0 else result


def sample_single_task_time(m: StragglerModel, rng: np.random.Generator, size=None):
    """Draw a + Exp(rate); `size` gives an array of independent draws."""
    return m.shift + rng.exponential(1.0 / m.rate, size=size)


def worker_rng(seed: int, worker: int) -> np.random.Generator:
    """Independent stream for one worker, derived from (seed, worker index) only."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(worker,)))


def from_mu_alpha(mu: float, alpha: float, tasks_per_unit: int = 1) -> StragglerModel:
    """Per-task law from the (mu, alpha) constants of the finishing-time formula.

    `tasks_per_unit` scales mu when mu is quoted per job of that many small tasks
    (lambda = tasks_per_unit * mu).
    """
    rate = mu * tasks_per_unit
    note = f"lambda = {tasks_per_unit} * mu = {rate:g}; a = alpha = {alpha:g}"
    return StragglerModel(per_task_rate=rate, per_task_shift=alpha, calibration_note=note)
