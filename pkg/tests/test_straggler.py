import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given
from scipy.stats import kstest

from strata.errors import InvalidArgumentError
from strata.models.system import StragglerModel
from strata.services.straggler import (
    cdf_s_tasks,
    from_mu_alpha,
    sample_single_task_time,
    survival_s_tasks,
    worker_rng,
)

rates = st.floats(min_value=0.05, max_value=50.0)
shifts = st.floats(min_value=0.0, max_value=0.5)


def test_cdf_is_zero_below_the_floor():
    m = StragglerModel(per_task_rate=2.0, per_task_shift=0.25)
    assert cdf_s_tasks(3, 0.7, m) == 0.0
    assert survival_s_tasks(3, 0.7, m) == 1.0


def test_cdf_matches_closed_form():
    m = StragglerModel(per_task_rate=1.0, per_task_shift=0.5)
    assert cdf_s_tasks(2, 3.0, m) == pytest.approx(1 - math.exp(-1.0), rel=1e-14)
    assert survival_s_tasks(2, 3.0, m) == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_array_input_returns_array():
    m = StragglerModel(per_task_rate=3.0)
    values = cdf_s_tasks(1, np.array([0.0, 0.5, 1.0]), m)
    assert isinstance(values, np.ndarray)
    np.testing.assert_allclose(values, 1 - np.exp(-3.0 * np.array([0.0, 0.5, 1.0])))


@given(rates, shifts, st.integers(min_value=1, max_value=12), st.floats(min_value=0, max_value=20))
def test_cdf_monotone_in_time_and_task_count(rate, shift, s, t):
    m = StragglerModel(per_task_rate=rate, per_task_shift=shift)
    assert cdf_s_tasks(s, t, m) <= cdf_s_tasks(s, t + 0.1, m)
    assert cdf_s_tasks(s + 1, t, m) <= cdf_s_tasks(s, t, m)
    assert cdf_s_tasks(s, t, m) + survival_s_tasks(s, t, m) == pytest.approx(1.0)


def test_rejects_bad_arguments():
    m = StragglerModel(per_task_rate=1.0)
    with pytest.raises(InvalidArgumentError):
        cdf_s_tasks(0, 1.0, m)
    with pytest.raises(InvalidArgumentError):
        cdf_s_tasks(1, -0.5, m)
    with pytest.raises(ValueError):
        StragglerModel(per_task_rate=0.0)
    with pytest.raises(ValueError):
        StragglerModel(per_task_rate=1.0, per_task_shift=-0.1)


def test_samples_respect_the_floor():
    m = StragglerModel(per_task_rate=4.0, per_task_shift=0.3)
    draws = sample_single_task_time(m, np.random.default_rng(7), size=10_000)
    assert draws.min() >= 0.3
    assert draws.mean() == pytest.approx(0.3 + 0.25, rel=0.05)


def test_single_task_draws_follow_the_cdf():
    m = StragglerModel(per_task_rate=3.0, per_task_shift=0.2)
    draws = sample_single_task_time(m, np.random.default_rng(2018), size=100_000)
    assert kstest(draws, lambda t: cdf_s_tasks(1, t, m)).pvalue > 0.01


def test_sample_mean_is_shift_plus_mean_delay():
    m = StragglerModel(per_task_rate=5.0, per_task_shift=0.1)
    draws = sample_single_task_time(m, np.random.default_rng(99), size=1_000_000)
    stderr = (1 / m.rate) / math.sqrt(draws.size)
    assert abs(draws.mean() - (m.shift + 1 / m.rate)) < 4 * stderr


@given(rates, shifts, st.integers(min_value=1, max_value=12), st.floats(min_value=0, max_value=20))
def test_s_tasks_take_s_times_one_task(rate, shift, s, t):
    m = StragglerModel(per_task_rate=rate, per_task_shift=shift)
    assert cdf_s_tasks(s, t, m) == pytest.approx(cdf_s_tasks(1, t / s, m), rel=1e-12, abs=1e-12)
    assert survival_s_tasks(s, t, m) == pytest.approx(survival_s_tasks(1, t / s, m), rel=1e-12, abs=1e-12)


def test_worker_streams_are_reproducible_and_distinct():
    first = worker_rng(11, 3).random(4)
    np.testing.assert_array_equal(first, worker_rng(11, 3).random(4))
    assert not np.array_equal(first, worker_rng(11, 4).random(4))
    assert not np.array_equal(first, worker_rng(12, 3).random(4))


def test_calibration_from_coefficient_constants():
    m = from_mu_alpha(0.1, 0.01, tasks_per_unit=100)
    assert m.rate == pytest.approx(10.0)
    assert m.shift == 0.01
    assert "lambda" in m.calibration_note
