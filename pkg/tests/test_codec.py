import itertools
import math

import numpy as np
import pytest

from strata.errors import (
    IncompleteJobError,
    InsufficientResultsError,
    InvalidArgumentError,
    NumericalFailureError,
)
from strata.models.codec import GeneratorSpec, LayerPlan, LinearJob
from strata.models.system import LayerAllocation
from strata.services import codec
from strata.services.codec import (
    assemble,
    bench_decode,
    compute_task,
    decode_layer,
    encode_job,
    encode_layer,
    generator_matrix,
    lift,
    lower,
    partition_job,
)
from strata.services.presets import FIG3_KS

PARITY = ((1, 0), (0, 1), (1, 1))


def _blocks(rng: np.random.Generator, k: int, shape=(2, 4)) -> list[np.ndarray]:
    return [rng.integers(-20, 21, size=shape) for _ in range(k)]


def _relative_error(decoded: np.ndarray, expected: np.ndarray) -> float:
    return float(np.linalg.norm(decoded - expected) / np.linalg.norm(expected))


def _subsets(n: int, k_j: int, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """Every k_j-subset of the workers when there are at most 5000, else 1000 random ones."""
    if math.comb(n, k_j) <= 5000:
        return list(itertools.combinations(range(n), k_j))
    return [tuple(sorted(rng.choice(n, size=k_j, replace=False))) for _ in range(1000)]


class TestPartition:
    def test_single_task_is_the_matrix(self):
        job = LinearJob(matrix=np.arange(6.0).reshape(2, 3), input=np.ones(3))
        (block,) = partition_job(job, 1)
        np.testing.assert_array_equal(block, job.matrix)

    def test_contiguous_blocks(self):
        job = LinearJob(matrix=np.arange(12.0).reshape(4, 3), input=np.ones(3))
        first, second = partition_job(job, 2)
        np.testing.assert_array_equal(first, job.matrix[:2])
        np.testing.assert_array_equal(second, job.matrix[2:])

    def test_restacking_is_exact(self):
        matrix = np.random.default_rng(3).normal(size=(12, 3))
        job = LinearJob(matrix=matrix, input=np.ones(3))
        assert np.array_equal(np.vstack(partition_job(job, 6)), matrix)

    def test_rows_must_divide(self):
        job = LinearJob(matrix=np.ones((5, 2)), input=np.ones(2))
        with pytest.raises(InvalidArgumentError):
            partition_job(job, 2)


class TestParityExample:
    @pytest.mark.parametrize("mode", ["real", "prime"])
    def test_any_two_workers_recover_the_job(self, mode):
        gen = GeneratorSpec(mode=mode, nodes=(0, 1, 2), matrix=PARITY)
        a1, a2 = np.array([[1, 2, 3]]), np.array([[4, -5, 6]])
        x = np.array([2, -1, 3])
        tasks = [a1, a2] if mode == "real" else [lift(a1, gen), lift(a2, gen)]
        results = [compute_task(task, x, gen) for task in encode_layer(tasks, gen)]

        payloads = [np.asarray(lower(res.payload) if mode == "prime" else res.payload) for res in results]
        np.testing.assert_array_equal(payloads[0], a1 @ x)
        np.testing.assert_array_equal(payloads[1], a2 @ x)
        np.testing.assert_array_equal(payloads[2], (a1 + a2) @ x)
        np.testing.assert_array_equal(payloads[2] - payloads[1], a1 @ x)

        for pair in itertools.combinations(results, 2):
            decoded = decode_layer(list(pair), gen, 2)
            if mode == "prime":
                decoded = lower(decoded)
            np.testing.assert_allclose(np.concatenate(decoded), np.concatenate([a1 @ x, a2 @ x]))


class TestMdsProperty:
    @pytest.mark.parametrize("n,k_j", [(3, 2), (6, 3), (20, 19)])
    def test_every_subset_decodes_exactly_in_prime_mode(self, n, k_j):
        gen = GeneratorSpec.for_workers(n, mode="prime")
        sources = _blocks(np.random.default_rng(n), k_j)
        coded = encode_layer([lift(block, gen) for block in sources], gen)
        for subset in itertools.combinations(range(n), k_j):
            decoded = decode_layer([coded[i] for i in subset], gen, k_j)
            np.testing.assert_array_equal(lower(decoded), np.stack(sources))

    @pytest.mark.parametrize(
        "n,k_j,systematic", [(3, 2, True), (6, 3, True), (6, 3, False), (20, 19, True), (20, 19, False)]
    )
    def test_every_subset_decodes_in_real_mode(self, n, k_j, systematic):
        gen = GeneratorSpec.for_workers(n, mode="real", systematic=systematic)
        sources = np.stack(_blocks(np.random.default_rng(n + 100), k_j)).astype(float)
        coded = encode_layer(list(sources), gen)
        for subset in itertools.combinations(range(n), k_j):
            decoded = decode_layer([coded[i] for i in subset], gen, k_j)
            assert _relative_error(decoded, sources) <= 1e-6

    @pytest.mark.parametrize("k_j", FIG3_KS)
    def test_fig3_layers_decode_in_real_mode(self, k_j):
        gen = GeneratorSpec.for_workers(20)
        sources = np.random.default_rng(k_j).normal(size=(k_j, 5, 3))
        coded = encode_layer(list(sources), gen)
        slowest = tuple(range(20 - k_j, 20))
        for subset in [slowest, *_subsets(20, k_j, np.random.default_rng(k_j + 1))]:
            decoded = decode_layer([coded[i] for i in subset], gen, k_j)
            assert _relative_error(decoded, sources) <= 1e-6, subset

    @pytest.mark.parametrize("n,k_j", [(25, 12), (30, 1), (30, 10), (30, 15), (30, 20), (30, 29)])
    @pytest.mark.parametrize("systematic", [True, False])
    def test_slowest_workers_decode_up_to_thirty_workers(self, n, k_j, systematic):
        gen = GeneratorSpec.for_workers(n, systematic=systematic)
        sources = np.random.default_rng(n * k_j).normal(size=(k_j, 4, 2))
        coded = encode_layer(list(sources), gen)
        last = tuple(range(n - k_j, n))
        for subset in [last, *_subsets(n, k_j, np.random.default_rng(7))]:
            decoded = decode_layer([coded[i] for i in subset], gen, k_j)
            assert _relative_error(decoded, sources) <= 1e-6, subset

    @pytest.mark.parametrize("mode", ["real", "prime"])
    def test_full_systematic_layer_is_identity(self, mode):
        gen = GeneratorSpec.for_workers(4, mode=mode)
        sources = _blocks(np.random.default_rng(9), 4)
        tasks = sources if mode == "real" else [lift(block, gen) for block in sources]
        for block, task in zip(sources, encode_layer(tasks, gen), strict=True):
            payload = lower(task.payload) if mode == "prime" else task.payload
            np.testing.assert_array_equal(payload, block)

    def test_systematic_prefix_returns_payloads(self):
        gen = GeneratorSpec.for_workers(5)
        sources = np.stack(_blocks(np.random.default_rng(4), 3)).astype(float)
        coded = encode_layer(list(sources), gen)
        np.testing.assert_array_equal(decode_layer(coded[:3], gen, 3), sources)

    @pytest.mark.parametrize("mode", ["real", "prime"])
    def test_encoding_is_linear(self, mode):
        gen = GeneratorSpec.for_workers(6, mode=mode)
        rng = np.random.default_rng(21)
        g, h = _blocks(rng, 3), _blocks(rng, 3)
        combined = [3 * a - 2 * b for a, b in zip(g, h, strict=True)]

        def encoded(blocks):
            tasks = blocks if mode == "real" else [lift(block, gen) for block in blocks]
            return [task.payload for task in encode_layer(tasks, gen)]

        for mixed, left, right in zip(encoded(combined), encoded(g), encoded(h), strict=True):
            if mode == "prime":
                np.testing.assert_array_equal(lower(mixed), lower(3 * left - 2 * right))
            else:
                np.testing.assert_allclose(mixed, 3 * left - 2 * right, atol=1e-9)


class TestDecodeErrors:
    def setup_method(self):
        self.gen = GeneratorSpec.for_workers(5)
        sources = np.stack(_blocks(np.random.default_rng(5), 3)).astype(float)
        self.sources = sources
        self.coded = encode_layer(list(sources), self.gen)

    def test_too_few_results(self):
        with pytest.raises(InsufficientResultsError):
            decode_layer(self.coded[2:4], self.gen, 3)

    def test_duplicate_workers(self):
        with pytest.raises(InvalidArgumentError):
            decode_layer([self.coded[1], self.coded[1], self.coded[3]], self.gen, 3)

    def test_extra_results_use_the_lowest_workers(self):
        everything = decode_layer(list(reversed(self.coded)), self.gen, 3)
        np.testing.assert_array_equal(everything, decode_layer(self.coded[:3], self.gen, 3))

    def test_singular_system_names_the_subset(self, monkeypatch):
        monkeypatch.setattr(codec, "generator_matrix", lambda gen, k_j: np.zeros((gen.n, k_j)))
        with pytest.raises(NumericalFailureError, match=r"\(1, 2, 4\)") as info:
            decode_layer([self.coded[i] for i in (1, 2, 4)], self.gen, 3)
        assert info.value.diagnostics["subset"] == (1, 2, 4)


class TestGenerator:
    def test_is_read_only(self):
        matrix = generator_matrix(GeneratorSpec.for_workers(4), 2)
        with pytest.raises(ValueError):
            matrix[0, 0] = 7.0

    def test_dimension_must_fit(self):
        with pytest.raises(InvalidArgumentError):
            generator_matrix(GeneratorSpec.for_workers(4), 5)
        with pytest.raises(InvalidArgumentError):
            generator_matrix(GeneratorSpec(nodes=(0, 1, 2), matrix=PARITY), 1)

    def test_lift_and_lower(self):
        gen = GeneratorSpec.for_workers(3, mode="prime")
        values = np.array([-3, 0, 5, -1_000_000])
        np.testing.assert_array_equal(lower(lift(values, gen)), values)
        with pytest.raises(InvalidArgumentError):
            lift(np.array([0.5, 1.0]), gen)


class TestAssemble:
    def test_single_task(self):
        alloc = LayerAllocation(ks=(1,))
        output = assemble([np.array([[3.0, 4.0]])], LayerPlan.contiguous(alloc))
        np.testing.assert_array_equal(output, [3.0, 4.0])

    @pytest.mark.parametrize("mode", ["real", "prime"])
    def test_end_to_end_equals_direct_product(self, mode):
        rng = np.random.default_rng(12)
        job = LinearJob(matrix=rng.integers(-9, 10, size=(12, 3)), input=rng.integers(-9, 10, size=3))
        alloc = LayerAllocation(ks=(4, 2))
        gen = GeneratorSpec.for_workers(6, mode=mode)
        for plan in (LayerPlan.contiguous(alloc), LayerPlan(assignments=((5, 0, 3, 1), (4, 2)), alloc=alloc)):
            per_worker = encode_job(job, plan, gen)
            decoded = []
            for j, k_j in enumerate(alloc.ks):
                chosen = rng.choice(6, size=k_j, replace=False)
                results = [compute_task(per_worker[i][j], job.input, gen) for i in chosen]
                decoded.append(decode_layer(results, gen, k_j))
            output = assemble(decoded, plan)
            if mode == "prime":
                np.testing.assert_array_equal(output, job.direct())
            else:
                assert _relative_error(output, job.direct()) <= 1e-6

    def test_missing_layer(self):
        plan = LayerPlan.contiguous(LayerAllocation(ks=(2, 1)))
        with pytest.raises(IncompleteJobError, match=r"\[2\]"):
            assemble([np.zeros((2, 1)), None], plan)

    def test_layer_wider_than_workers(self):
        job = LinearJob(matrix=np.ones((4, 2)), input=np.ones(2))
        plan = LayerPlan.contiguous(LayerAllocation(ks=(4,)))
        with pytest.raises(InvalidArgumentError):
            encode_job(job, plan, GeneratorSpec.for_workers(3))


class TestBenchmark:
    @pytest.mark.parametrize("mode", ["real", "prime"])
    def test_reports_every_dimension(self, mode):
        report = bench_decode((1, 5, 10, 19), GeneratorSpec.for_workers(19, mode=mode), repeats=2)
        assert [timing.k for timing in report.timings] == [1, 5, 10, 19]
        assert all(timing.seconds >= 0 for timing in report.timings)
        assert report.fitted_exponent is not None
        assert report.serial_seconds >= 0 and report.concurrent_seconds >= 0
        assert "k_j^3" in report.note

    def test_rejects_dimension_above_n(self):
        with pytest.raises(InvalidArgumentError):
            bench_decode((5,), GeneratorSpec.for_workers(4))
