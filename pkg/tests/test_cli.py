import csv
import io
import json

import numpy as np
import pytest
from click.testing import CliRunner

from strata.cli import cli
from strata.errors import NumericalFailureError
from strata.models.system import SystemShape
from strata.services import analysis
from strata.services.allocator import brute_force_maximin
from strata.services.presets import FIG3_KS
from strata.utils.matrix_io import read_matrix_csv


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _rows(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


class TestOptimize:
    def test_fig3_preset(self, runner):
        result = runner.invoke(cli, ["optimize", "--preset", "fig3"])
        assert result.exit_code == 0, result.output
        data = json.loads(result.stdout)
        assert data["r"] == 10
        assert tuple(data["ks"]) == FIG3_KS
        assert data["z"] == {"numerator": 2, "denominator": 1}
        assert data["z_float"] == 2.0

    def test_single_layer(self, runner):
        result = runner.invoke(cli, ["optimize", "--n", "20", "--k", "13", "--r", "1"])
        assert json.loads(result.stdout)["ks"] == [13]

    def test_straggler_margin(self, runner):
        result = runner.invoke(cli, ["optimize", "--n", "20", "--k", "100", "--r", "10", "--stragglers", "1"])
        data = json.loads(result.stdout)
        oracle = brute_force_maximin(SystemShape(n=20, k=100, r=10), stragglers=1)
        assert data["straggler_margin"] == 1
        assert data["z"]["numerator"] / data["z"]["denominator"] == float(oracle.z)
        assert max(data["ks"]) <= 19

    def test_omitted_r_is_selected(self, runner):
        result = runner.invoke(cli, ["optimize", "--n", "20", "--k", "100"])
        assert json.loads(result.stdout)["r"] == 10

    def test_exact(self, runner):
        result = runner.invoke(
            cli, ["optimize", "--n", "6", "--k", "6", "--r", "2", "--rate", "1", "--t", "2", "--exact"]
        )
        assert result.exit_code == 0, result.output
        data = json.loads(result.stdout)
        assert data["t"] == 2.0
        assert 0 < data["finishing_probability"] <= 1

    def test_infeasible_exits_2(self, runner):
        result = runner.invoke(cli, ["optimize", "--n", "5", "--k", "30", "--r", "2"])
        assert result.exit_code == 2
        assert "r*(n-S)" in result.stderr

    def test_more_layers_than_tasks_exits_2(self, runner):
        assert runner.invoke(cli, ["optimize", "--n", "5", "--k", "3", "--r", "4"]).exit_code == 2

    def test_unknown_flag_exits_1(self, runner):
        assert runner.invoke(cli, ["optimize", "--bogus"]).exit_code == 1

    def test_config_file_with_flag_override(self, runner, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"n": 20, "k": 100, "r": 5}))
        from_file = json.loads(runner.invoke(cli, ["optimize", "--config", str(config)]).stdout)
        overridden = json.loads(runner.invoke(cli, ["optimize", "--config", str(config), "--r", "10"]).stdout)
        assert from_file["r"] == 5
        assert overridden["r"] == 10
        assert tuple(overridden["ks"]) == FIG3_KS


class TestAnalysisCommands:
    def test_exponents_at_k_100(self, runner):
        result = runner.invoke(cli, ["exponents", "--preset", "fig5", "--k", "100"])
        assert result.exit_code == 0, result.output
        (row,) = _rows(result.stdout)
        assert float(row["L"]) == pytest.approx(0.2)
        assert float(row["L_p"]) == pytest.approx(0.11)
        assert float(row["L_u"]) == pytest.approx(0.02)
        assert float(row["ratio"]) == pytest.approx(20 / 11)

    def test_fig5_sweep(self, runner):
        first = runner.invoke(cli, ["exponents", "--preset", "fig5"])
        second = runner.invoke(cli, ["exponents", "--preset", "fig5"])
        assert first.exit_code == 0, first.output
        assert first.stdout == second.stdout
        rows = _rows(first.stdout)
        assert len(rows) == 190
        assert [int(row["k"]) for row in rows] == list(range(1, 191))

    def test_cdf_at_zero(self, runner):
        result = runner.invoke(
            cli, ["cdf", "--n", "1", "--k", "1", "--r", "1", "--rate", "1", "--shift", "0", "--t", "0"]
        )
        assert result.exit_code == 0, result.output
        (row,) = _rows(result.stdout)
        assert float(row["analytic_cdf"]) == 0.0
        assert float(row["analytic_tail"]) == 1.0
        assert row["asymptotic_tail"] == ""

    def test_fig3_cdf_grid(self, runner):
        result = runner.invoke(cli, ["cdf", "--preset", "fig3"])
        rows = _rows(result.stdout)
        assert len(rows) == 20
        cdf = [float(row["analytic_cdf"]) for row in rows]
        assert cdf == sorted(cdf)
        half = next(row for row in rows if float(row["t"]) == 0.5)
        assert float(half["analytic_tail"]) == pytest.approx(0.4476, abs=5e-4)

    def test_expected_fig4(self, runner):
        result = runner.invoke(cli, ["expected", "--preset", "fig4", "--k", "100"])
        assert result.exit_code == 0, result.output
        values = {row["scheme"]: float(row["expected_time"]) for row in _rows(result.stdout)}
        assert values["hierarchical"] == pytest.approx(4.5844, rel=1e-3)
        assert values["mds_baseline"] == pytest.approx(6.7750, rel=0.02)
        assert set(values) == {"hierarchical", "mds_baseline", "uncoded"}

    def test_numerical_failure_exits_3(self, runner, monkeypatch):
        def fail(*args, **kwargs):
            raise NumericalFailureError("did not converge", {"abserr": 1.0})

        monkeypatch.setattr(analysis, "expected_finishing_time", fail)
        result = runner.invoke(cli, ["expected", "--preset", "fig4", "--k", "20"])
        assert result.exit_code == 3
        assert "did not converge" in result.stderr


class TestSimulate:
    ARGS = ["simulate", "--preset", "fig3", "--trials", "2000", "--t", "0.5", "--t", "1.0", "--seed", "9"]

    def test_same_seed_same_output(self, runner):
        first, second = runner.invoke(cli, self.ARGS), runner.invoke(cli, self.ARGS)
        assert first.exit_code == 0, first.output
        assert first.stdout == second.stdout
        rows = _rows(first.stdout)
        assert [float(row["t"]) for row in rows] == [0.5, 1.0]
        assert all(0 <= float(row["empirical_cdf"]) <= 1 for row in rows)
        assert "mean tau" in first.stderr

    def test_dump(self, runner, tmp_path):
        dump = tmp_path / "trials.csv"
        result = runner.invoke(cli, [*self.ARGS[:4], "100", *self.ARGS[5:], "--dump", str(dump)])
        assert result.exit_code == 0, result.output
        rows = _rows(dump.read_text())
        assert len(rows) == 100
        for row in rows:
            layers = [float(row[f"layer_{j}_done"]) for j in range(1, 11)]
            assert float(row["tau"]) == max(layers)

    def test_zero_trials_exits_2(self, runner):
        result = runner.invoke(cli, [*self.ARGS[:4], "0", *self.ARGS[5:]])
        assert result.exit_code == 2


class TestDemo:
    def test_parity_example(self, runner):
        result = runner.invoke(cli, ["demo", "--example", "--seed", "4"])
        assert result.exit_code == 0, result.output
        summary = json.loads(result.stdout)
        assert summary["n"] == 3
        assert summary["ks"] == [2]
        assert summary["verified"] is True
        assert summary["decode_order"] == [1]
        assert summary["tau"] == sorted(summary["worker_times"])[1]

    def test_identity_job_writes_the_input(self, runner, tmp_path):
        matrix, vector, out = tmp_path / "a.csv", tmp_path / "x.csv", tmp_path / "y.csv"
        np.savetxt(matrix, np.eye(4), delimiter=",")
        x = np.array([3.0, -1.5, 2.0, 7.0])
        np.savetxt(vector, x, delimiter=",")
        args = ["demo", "--matrix", str(matrix), "--vector", str(vector), "--n", "4", "--k", "4", "--r", "2"]

        result = runner.invoke(cli, [*args, "--out", str(out)])
        assert result.exit_code == 0, result.output
        np.testing.assert_allclose(read_matrix_csv(out).reshape(-1), x, atol=1e-9)
        assert runner.invoke(cli, args).stdout == runner.invoke(cli, args).stdout

    def test_shape_mismatch_exits_2(self, runner, tmp_path):
        matrix, vector = tmp_path / "a.csv", tmp_path / "x.csv"
        np.savetxt(matrix, np.eye(4), delimiter=",")
        np.savetxt(vector, np.ones(3), delimiter=",")
        result = runner.invoke(
            cli, ["demo", "--matrix", str(matrix), "--vector", str(vector), "--n", "4", "--k", "4", "--r", "2"]
        )
        assert result.exit_code == 2

    def test_crashing_every_worker_exits_2(self, runner):
        result = runner.invoke(cli, ["demo", "--example", "--crash", "0:0", "--crash", "1:0"])
        assert result.exit_code == 2
        assert "cannot be decoded" in result.stderr


class TestBench:
    def test_writes_one_row_per_dimension(self, runner):
        result = runner.invoke(cli, ["bench", "--ks", "1,3", "--repeats", "1"])
        assert result.exit_code == 0, result.output
        assert [int(row["k"]) for row in _rows(result.stdout)] == [1, 3]
        assert "fitted exponent" in result.stderr
