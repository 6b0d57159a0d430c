"""Export service - CSV and JSON renderings of analysis and simulation results."""

import csv
import io
import json
from collections.abc import Iterable, Sequence

from strata.models.allocation import MaximinSolution
from strata.models.results import TrialResult

CDF_HEADER = ("t", "analytic_cdf", "analytic_tail", "asymptotic_tail")
SIMULATE_HEADER = (*CDF_HEADER, "empirical_cdf", "empirical_stderr")
EXPECTED_HEADER = ("k", "scheme", "expected_time")
EXPONENTS_HEADER = ("k", "L", "L_p", "L_u", "ratio")
BENCH_HEADER = ("k", "seconds")


def format_value(value) -> str:
    """Shortest round-trip text for floats; blank for missing values."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def generate_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Render rows as CSV with a fixed header and '\\n' line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(value) for value in row])
    return buffer.getvalue()


def trial_dump_header(r: int) -> tuple[str, ...]:
    return ("trial", "scheme", "tau", *(f"layer_{j}_done" for j in range(1, r + 1)))


def generate_trial_dump(trials: Sequence[TrialResult], r: int) -> str:
    """One row per trial; baseline trials fill only layer_1_done."""
    rows = []
    for index, trial in enumerate(trials):
        layers = list(trial.per_layer_done) + [None] * (r - len(trial.per_layer_done))
        rows.append([index, trial.scheme.value, trial.tau, *layers[:r]])
    return generate_csv(trial_dump_header(r), rows)


def generate_solution_json(solution: MaximinSolution, **extra) -> str:
    """Allocation JSON with z as an exact numerator/denominator pair."""
    data = {
        "r": solution.r,
        "ks": list(solution.ks.ks),
        "z": solution.model_dump()["z"],
        "z_float": float(solution.z),
        "straggler_margin": solution.straggler_margin,
        **extra,
    }
    return json.dumps(data, indent=2) + "\n"

