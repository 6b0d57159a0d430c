"""Command-line front end: allocation, analytics, simulation and the coded-execution demo.

Data (CSV/JSON) goes to stdout or --out; logs go to stderr.
Exit codes: 0 success, 1 usage, 2 invalid or infeasible input, 3 numerical failure.
"""

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError

from strata.config import settings
from strata.errors import InvalidArgumentError, StrataError
from strata.models.allocation import MaximinSolution, maximin_objective
from strata.models.codec import GeneratorSpec, LayerPlan, LinearJob
from strata.models.run_config import RunConfig
from strata.models.system import LayerAllocation, SchemeId, StragglerModel, SystemShape
from strata.services import analysis, export_service
from strata.services.allocator import (
    optimize_exact,
    optimize_maximin,
    resolve_allocation,
    select_r,
)
from strata.services.codec import bench_decode
from strata.services.harness import run_execution_harness
from strata.services.presets import k_sweep, resolve_config
from strata.services.simulator import run_monte_carlo, sample_trials
from strata.utils.matrix_io import read_matrix_csv, read_vector_csv, write_matrix_csv

logger = logging.getLogger(__name__)

USAGE_EXIT = 1
INVALID_EXIT = 2


class StrataGroup(click.Group):
    """Click group that maps domain errors onto the exit-code contract."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            result = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.UsageError as e:
            e.show()
            sys.exit(USAGE_EXIT)
        except click.ClickException as e:
            e.show()
            sys.exit(USAGE_EXIT)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(USAGE_EXIT)
        except StrataError as e:
            logger.debug("command failed", exc_info=True)
            click.echo(f"Error: {e}", err=True)
            sys.exit(e.exit_code)
        except ValidationError as e:
            click.echo(f"Error: invalid input\n{e}", err=True)
            sys.exit(INVALID_EXIT)
        sys.exit(result if isinstance(result, int) else 0)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    logger.info(f"Wrote {out}")


def _parse_ints(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise click.BadParameter(f"expected comma-separated integers, got '{text}'") from e


def _parse_grid(points: tuple[float, ...], grid: str | None) -> tuple[float, ...] | None:
    """--t values plus --t-grid given as 'start:stop:step' or a comma list."""
    values = list(points)
    if grid:
        try:
            if ":" in grid:
                start, stop, step = (float(part) for part in grid.split(":"))
                count = int(round((stop - start) / step)) + 1
                values += [round(start + i * step, 12) for i in range(count)]
            else:
                values += [float(part) for part in grid.split(",") if part.strip()]
        except ValueError as e:
            raise click.BadParameter(f"cannot parse --t-grid '{grid}'") from e
    return tuple(sorted(set(values))) if values else None


def run_options(func):
    """Flags shared by every run command; unset flags stay None so presets can fill them."""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="RunConfig JSON file; flags override it"),
        click.option("--preset", type=click.Choice(["fig3", "fig4", "fig5", "fig6", "none"]), default=None, help="Figure calibration preset"),
        click.option("--n", type=int, default=None, help="Worker count"),
        click.option("--k", type=int, default=None, help="Task count"),
        click.option("--r", type=int, default=None, help="Layer count (omit to select r)"),
        click.option("--ks", default=None, help="Explicit allocation, e.g. 19,17,15"),
        click.option("--rate", type=float, default=None, help="Per-task exponential rate lambda"),
        click.option("--shift", type=float, default=None, help="Per-task deterministic floor a"),
        click.option("--mu", type=float, default=None, help="Coefficient mu (also lambda when --rate is absent)"),
        click.option("--alpha", type=float, default=None, help="Shift alpha (a when --shift is absent)"),
        click.option("--stragglers", type=int, default=None, help="Straggler margin S"),
        click.option("--scheme", type=click.Choice([s.value for s in SchemeId]), default=None),
        click.option("--t", "t_points", type=float, multiple=True, help="Evaluation time (repeatable)"),
        click.option("--t-grid", default=None, help="start:stop:step or comma-separated times"),
        click.option("--trials", type=int, default=None, help="Monte Carlo trials"),
        click.option("--seed", type=int, default=None, help=f"Random seed (default {settings.default_seed})"),
        click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Write output here instead of stdout"),
        click.option("--field", type=click.Choice(["real", "prime"]), default=None, help="Codec arithmetic"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _resolve(params: dict) -> RunConfig:
    config_path = params.pop("config_path", None)
    file_config = None
    if config_path is not None:
        try:
            file_config = RunConfig.model_validate_json(config_path.read_text())
        except OSError as e:
            raise InvalidArgumentError(f"cannot read config '{config_path}': {e}") from e
    flags = dict(params)
    flags["ks"] = _parse_ints(flags.get("ks"))
    flags["t_grid"] = _parse_grid(flags.pop("t_points", ()), flags.pop("t_grid", None))
    return resolve_config(file_config, flags)


def _allocation(config: RunConfig) -> tuple[SystemShape, LayerAllocation]:
    return resolve_allocation(config.n, config.k, config.r, config.ks, config.stragglers)


def _curve_row(scheme: SchemeId, shape, alloc, m: StragglerModel, t: float) -> list:
    return list(analysis.curve_point(scheme, shape, alloc, m, t))


def _require_grid(config: RunConfig) -> tuple[float, ...]:
    if not config.t_grid:
        raise InvalidArgumentError("give at least one time with --t or --t-grid")
    return config.t_grid


@click.group(cls=StrataGroup)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr")
def cli(verbose: bool):
    """Hierarchical coded computation: allocation, finishing-time analysis and simulation."""
    level = logging.DEBUG if verbose else settings.log_level
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        force=True,
    )


@cli.command()
@run_options
@click.option("--exact", is_flag=True, help="Maximize Pr(tau <= t) at the first --t instead")
def optimize(exact: bool, **params):
    """Choose (k_1, ..., k_r); select r as well when --r is omitted."""
    config = _resolve(params)
    if config.n is None or config.k is None:
        raise InvalidArgumentError("--n and --k are required")
    if exact:
        times = _require_grid(config)
        shape = config.shape()
        m = config.straggler_model()
        alloc = optimize_exact(shape, m, times[0])
        solution = MaximinSolution(
            n=shape.n, ks=alloc, z=maximin_objective(shape.n, alloc.ks)
        )
        extra = {"t": times[0], "finishing_probability": analysis.finishing_cdf_dp(alloc, shape, m, times[0])}
    elif config.r is None:
        _, solution = select_r(config.n, config.k, stragglers=config.stragglers)
        extra = {}
    else:
        solution = optimize_maximin(config.shape(), config.stragglers)
        extra = {}
    _emit(export_service.generate_solution_json(solution, **extra), config.out)


@cli.command()
@run_options
def cdf(**params):
    """Analytic Pr(tau <= t), Pr(tau > t) and the asymptotic tail on a time grid."""
    config = _resolve(params)
    shape, alloc = _allocation(config)
    m = config.straggler_model()
    rows = [_curve_row(config.scheme, shape, alloc, m, t) for t in _require_grid(config)]
    _emit(export_service.generate_csv(export_service.CDF_HEADER, rows), config.out)


@cli.command()
@run_options
def expected(**params):
    """E[tau] by quadrature for the hierarchical scheme and every applicable baseline."""
    only = SchemeId(params["scheme"]) if params.get("scheme") else None
    explicit_k = params.get("k")
    config = _resolve(params)
    m = config.straggler_model()
    rows = []
    for k in k_sweep(config, explicit_k):
        shape, alloc = _allocation(config.merged(k=k))
        for scheme in SchemeId:
            if only is not None and scheme is not only:
                continue
            if scheme is not SchemeId.HIERARCHICAL:
                try:
                    scheme.check_shape(shape)
                except InvalidArgumentError:
                    continue
            target = alloc if scheme is SchemeId.HIERARCHICAL else scheme
            rows.append([k, scheme.value, analysis.expected_finishing_time(target, shape, m)])
    _emit(export_service.generate_csv(export_service.EXPECTED_HEADER, rows), config.out)


@cli.command()
@run_options
def exponents(**params):
    """Leading failure-exponent coefficients L, L_p, L_u and the ratio L / L_p."""
    explicit_k = params.get("k")
    config = _resolve(params)
    mu = config.coefficient_mu()
    rows = []
    for k in k_sweep(config, explicit_k):
        shape, alloc = _allocation(config.merged(k=k))
        report = analysis.exponent_report(alloc, shape, mu)
        ratio = report.ratio
        rows.append([
            k,
            float(report.L),
            None if report.L_p is None else float(report.L_p),
            None if report.L_u is None else float(report.L_u),
            None if ratio is None else float(ratio),
        ])
    _emit(export_service.generate_csv(export_service.EXPONENTS_HEADER, rows), config.out)


@cli.command()
@run_options
@click.option("--per-task-draws", is_flag=True, help="Draw every task duration independently")
@click.option("--dump", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Write per-trial CSV here")
def simulate(per_task_draws: bool, dump: Path | None, **params):
    """Monte Carlo CDF next to the analytic curve, with binomial standard errors."""
    config = _resolve(params)
    if config.trials < 1:
        raise InvalidArgumentError("--trials must be at least 1")
    shape, alloc = _allocation(config)
    m = config.straggler_model()
    grid = _require_grid(config)
    report = run_monte_carlo(
        config.scheme,
        shape,
        m,
        config.trials,
        config.seed,
        alloc=alloc,
        t_grid=grid,
        per_task_draws=per_task_draws,
    )
    rows = [
        [*_curve_row(config.scheme, shape, alloc, m, t), p, se]
        for t, p, se in zip(grid, report.cdf, report.cdf_stderr, strict=True)
    ]
    _emit(export_service.generate_csv(export_service.SIMULATE_HEADER, rows), config.out)
    click.echo(f"mean tau = {report.mean:.6g} +/- {report.mean_stderr:.2g}", err=True)
    if dump is not None:
        trials = sample_trials(config.scheme, shape, m, config.trials, config.seed, alloc=alloc)
        r = shape.r if config.scheme is SchemeId.HIERARCHICAL else 1
        _emit(export_service.generate_trial_dump(trials, r), dump)


def _parse_crashes(specs: tuple[str, ...]) -> dict[int, int]:
    crashes = {}
    for spec in specs:
        try:
            worker, tasks = (int(part) for part in spec.split(":"))
        except ValueError as e:
            raise click.BadParameter(f"--crash expects WORKER:TASKS, got '{spec}'") from e
        crashes[worker] = tasks
    return crashes


@cli.command()
@run_options
@click.option("--matrix", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="CSV matrix A")
@click.option("--vector", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="CSV input x")
@click.option("--example", is_flag=True, help="Run the 3-worker (3,2) example with parity A_1 + A_2")
@click.option("--crash", multiple=True, help="WORKER:TASKS, worker goes silent after TASKS results")
@click.option("--deadline", type=float, default=None, help="Virtual-time deadline")
@click.option("--wall-clock", is_flag=True, help="Sleep for the sampled delays (demo only)")
def demo(matrix, vector, example, crash, deadline, wall_clock, **params):
    """Encode a linear job, run it on simulated workers and verify the decoded product."""
    config = _resolve(params)
    if config.rate is None and config.mu is None:
        config = config.merged(rate=1.0)
    m = config.straggler_model()
    mode = config.field

    if example:
        rng = np.random.default_rng(config.seed)
        job = LinearJob(matrix=rng.integers(-9, 10, size=(2, 3)), input=rng.integers(-9, 10, size=3))
        alloc = LayerAllocation(ks=(2,))
        gen = GeneratorSpec(mode=mode, nodes=(0, 1, 2), matrix=((1, 0), (0, 1), (1, 1)))
    else:
        if matrix is None or vector is None:
            raise InvalidArgumentError("--matrix and --vector are required (or use --example)")
        job = LinearJob(matrix=read_matrix_csv(matrix), input=read_vector_csv(vector))
        shape, alloc = _allocation(config)
        gen = GeneratorSpec.for_workers(shape.n, mode=mode)

    report = run_execution_harness(
        job,
        LayerPlan.contiguous(alloc),
        gen,
        m,
        config.seed,
        crashes=_parse_crashes(crash),
        deadline=deadline,
        wall_clock=wall_clock,
    )
    summary = {
        "n": gen.n,
        "ks": list(alloc.ks),
        "field": mode,
        "tau": report.trial.tau,
        "per_layer_done": list(report.trial.per_layer_done),
        "decode_order": [j + 1 for j in report.decode_order],
        "messages": report.messages,
        "worker_times": list(report.worker_times.t_i),
        "verified": True,
    }
    if config.out is not None:
        write_matrix_csv(config.out, report.decoded_output.reshape(1, -1))
    click.echo(json.dumps(summary, indent=2))


@cli.command()
@click.option("--ks", "ks_text", default="5,10,19", show_default=True, help="Layer dimensions to time")
@click.option("--n", type=int, default=None, help="Worker count (default: largest k_j)")
@click.option("--field", type=click.Choice(["real", "prime"]), default="real", show_default=True)
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
def bench(ks_text: str, n: int | None, field: str, repeats: int, out: Path | None):
    """Time layer decoding against k_j (informational)."""
    ks = _parse_ints(ks_text)
    if not ks:
        raise click.BadParameter("--ks needs at least one value")
    gen = GeneratorSpec.for_workers(n or max(ks), mode=field)
    report = bench_decode(ks, gen, repeats=repeats)
    rows = [[timing.k, timing.seconds] for timing in report.timings]
    _emit(export_service.generate_csv(export_service.BENCH_HEADER, rows), out)
    click.echo(
        f"fitted exponent={report.fitted_exponent}; serial={report.serial_seconds:.3g}s "
        f"concurrent={report.concurrent_seconds:.3g}s; {report.note}",
        err=True,
    )


if __name__ == "__main__":
    cli()
