"""Hierarchical MDS coding of linear jobs.

The k row blocks of A are clustered into r layers; layer j is encoded with an (n, k_j)
MDS code and worker i holds the i-th coded block of every layer. Any k_j worker results
for layer j recover that layer's k_j task outputs. Prime-field layers use polynomial
evaluation at the nodes; real layers use a seeded Gaussian generator.
"""

import logging
import math
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import galois
import numpy as np
from cachetools import LRUCache, cached

from strata.config import settings
from strata.errors import (
    IncompleteJobError,
    InsufficientResultsError,
    InvalidArgumentError,
    NumericalFailureError,
)
from strata.models.codec import (
    DecodeBenchmark,
    DecodeTiming,
    EncodedTask,
    GeneratorSpec,
    LayerPlan,
    LinearJob,
)

logger = logging.getLogger(__name__)


def field_of(gen: GeneratorSpec) -> type[galois.FieldArray]:
    return galois.GF(gen.modulus)


def lift(values: np.ndarray, gen: GeneratorSpec) -> galois.FieldArray:
    """Map an integer-valued array into GF(p); negative entries wrap around."""
    if isinstance(values, galois.FieldArray):
        return values
    values = np.asarray(values)
    if not np.all(values == np.round(values)):
        raise InvalidArgumentError("prime-field mode needs integer-valued matrices and inputs")
    return field_of(gen)(np.mod(np.round(values).astype(np.int64), gen.modulus))


def lower(values: galois.FieldArray) -> np.ndarray:
    """Signed representatives in (-p/2, p/2] of field elements."""
    p = type(values).characteristic
    plain = values.view(np.ndarray).astype(np.int64)
    return np.where(plain > p // 2, plain - p, plain)


def _real_generator(gen: GeneratorSpec, k_j: int) -> np.ndarray:
    """Seeded Gaussian generator; systematic form stacks the identity on a Gaussian parity block.

    Every k_j x k_j minor is invertible with probability one. The draw depends on
    (seed, n, k_j) only, so encoder and decoder rebuild the same matrix.
    """
    seed = np.random.SeedSequence(settings.real_generator_seed, spawn_key=(gen.n, k_j))
    rng = np.random.default_rng(seed)
    if not gen.systematic:
        return rng.standard_normal((gen.n, k_j)) / math.sqrt(k_j)
    parity = rng.standard_normal((gen.n - k_j, k_j)) / math.sqrt(k_j)
    return np.vstack([np.eye(k_j), parity])


def _prime_generator(gen: GeneratorSpec, k_j: int) -> galois.FieldArray:
    gf = field_of(gen)
    vander = gf([[pow(node, c, gen.modulus) for c in range(k_j)] for node in gen.nodes])
    if not gen.systematic:
        return vander
    return vander @ np.linalg.inv(vander[:k_j])


@cached(LRUCache(maxsize=256))
def generator_matrix(gen: GeneratorSpec, k_j: int) -> np.ndarray:
    """n x k_j generator of one layer; every k_j rows form an invertible matrix."""
    if not 1 <= k_j <= gen.n:
        raise InvalidArgumentError(f"layer dimension k_j={k_j} must lie in [1, n={gen.n}]")
    if gen.matrix is not None:
        width = len(gen.matrix[0])
        if width != k_j:
            raise InvalidArgumentError(f"explicit generator has {width} columns, layer needs {k_j}")
        rows = np.array(gen.matrix, dtype=np.int64)
        matrix = lift(rows, gen) if gen.mode == "prime" else rows.astype(float)
    elif gen.mode == "prime":
        matrix = _prime_generator(gen, k_j)
    else:
        matrix = _real_generator(gen, k_j)
    matrix.setflags(write=False)
    return matrix


def _stack(arrays: Sequence[np.ndarray], gen: GeneratorSpec) -> np.ndarray:
    plain = np.stack([np.asarray(a).view(np.ndarray) for a in arrays])
    return field_of(gen)(plain) if gen.mode == "prime" else plain.astype(float)


def partition_job(job: LinearJob, k: int) -> list[np.ndarray]:
    """Split A into k contiguous row blocks of equal height."""
    if k < 1 or job.rows % k:
        raise InvalidArgumentError(f"{job.rows} rows do not split into k={k} equal blocks")
    return np.split(job.matrix, k)


def encode_layer(
    tasks: Sequence[np.ndarray], gen: GeneratorSpec, layer: int = 0
) -> list[EncodedTask]:
    """Encode k_j task blocks into n coded blocks h^j_1..h^j_n."""
    if not tasks:
        raise InvalidArgumentError("a layer needs at least one task")
    shapes = {np.shape(task) for task in tasks}
    if len(shapes) != 1:
        raise InvalidArgumentError(f"task blocks of one layer must share a shape, got {shapes}")
    stacked = _stack(tasks, gen)
    block_shape = stacked.shape[1:]
    coded = generator_matrix(gen, len(tasks)) @ stacked.reshape(len(tasks), -1)
    return [
        EncodedTask(layer=layer, worker=i, payload=coded[i].reshape(block_shape))
        for i in range(gen.n)
    ]


def encode_job(job: LinearJob, plan: LayerPlan, gen: GeneratorSpec) -> list[list[EncodedTask]]:
    """Per-worker task lists: entry [i][j] is the coded block of layer j for worker i."""
    for j, k_j in enumerate(plan.alloc.ks, start=1):
        if k_j > gen.n:
            raise InvalidArgumentError(f"layer {j} has k_j={k_j} > n={gen.n}")
    blocks = partition_job(job, plan.k)
    if gen.mode == "prime":
        blocks = [lift(block, gen) for block in blocks]
    layers = [
        encode_layer([blocks[i] for i in tasks], gen, layer=j)
        for j, tasks in enumerate(plan.assignments)
    ]
    return [[layers[j][i] for j in range(plan.alloc.r)] for i in range(gen.n)]


def compute_task(task: EncodedTask, x: np.ndarray, gen: GeneratorSpec) -> EncodedTask:
    """Worker-side evaluation h^j_i(x); linear, so it commutes with encoding."""
    vector = lift(x, gen) if gen.mode == "prime" else np.asarray(x, dtype=float)
    return EncodedTask(layer=task.layer, worker=task.worker, payload=task.payload @ vector)


def decode_layer(results: Sequence[EncodedTask], gen: GeneratorSpec, k_j: int) -> np.ndarray:
    """Recover the k_j source outputs of one layer from any k_j worker results.

    The k_j lowest worker indices are used and extra results are ignored.
    """
    workers = [res.worker for res in results]
    if len(set(workers)) != len(workers):
        raise InvalidArgumentError(f"results carry duplicate worker indices {sorted(workers)}")
    if len(results) < k_j:
        raise InsufficientResultsError(f"layer needs {k_j} results, got {len(results)}")
    chosen = sorted(results, key=lambda res: res.worker)[:k_j]
    subset = tuple(res.worker for res in chosen)
    if any(i >= gen.n for i in subset):
        raise InvalidArgumentError(f"worker index out of range for n={gen.n}: {subset}")

    payloads = _stack([res.payload for res in chosen], gen)
    block_shape = payloads.shape[1:]
    if gen.systematic and gen.matrix is None and subset == tuple(range(k_j)):
        return payloads

    system = generator_matrix(gen, k_j)[list(subset)]
    try:
        solved = np.linalg.solve(system, payloads.reshape(k_j, -1))
    except np.linalg.LinAlgError as e:
        raise NumericalFailureError(
            f"decode system for workers {subset} is singular", {"subset": subset}
        ) from e
    return solved.reshape((k_j, *block_shape))


def assemble(decoded: Sequence[np.ndarray | None], plan: LayerPlan) -> np.ndarray:
    """Put decoded task outputs back in task order and concatenate them into A x."""
    if len(decoded) != plan.alloc.r or any(layer is None for layer in decoded):
        missing = [j + 1 for j in range(plan.alloc.r) if j >= len(decoded) or decoded[j] is None]
        raise IncompleteJobError(f"layers {missing} are not decoded")
    outputs: list[np.ndarray | None] = [None] * plan.k
    for tasks, layer in zip(plan.assignments, decoded, strict=True):
        if isinstance(layer, galois.FieldArray):
            layer = lower(layer)
        for position, task in enumerate(tasks):
            outputs[task] = np.asarray(layer[position])
    return np.concatenate(outputs)


def _timed_decode(results: list[EncodedTask], gen: GeneratorSpec, k_j: int) -> float:
    start = time.perf_counter()
    decode_layer(results, gen, k_j)
    return time.perf_counter() - start


def bench_decode(
    ks: Sequence[int], gen: GeneratorSpec, repeats: int = 5, block_rows: int = 8
) -> DecodeBenchmark:
    """Decode wall time against layer dimension.

    Each layer is decoded from the last k_j workers so a full solve is always needed. The
    layers of `ks` are also decoded one after another and then concurrently.
    """
    rng = np.random.default_rng(settings.default_seed)
    prepared = []
    for k_j in ks:
        if k_j > gen.n:
            raise InvalidArgumentError(f"k_j={k_j} exceeds n={gen.n}")
        tasks = [rng.integers(-50, 50, size=(block_rows, block_rows)) for _ in range(k_j)]
        if gen.mode == "prime":
            tasks = [lift(task, gen) for task in tasks]
        coded = encode_layer(tasks, gen)
        prepared.append((coded[gen.n - k_j :], k_j))

    timings = []
    for results, k_j in prepared:
        best = min(_timed_decode(results, gen, k_j) for _ in range(max(repeats, 1)))
        timings.append(DecodeTiming(k=k_j, seconds=best))

    exponent = None
    points = [(math.log(t.k), math.log(t.seconds)) for t in timings if t.k > 1 and t.seconds > 0]
    if len({p[0] for p in points}) >= 2:
        exponent = float(np.polyfit(*zip(*points, strict=True), 1)[0])

    start = time.perf_counter()
    for results, k_j in prepared:
        decode_layer(results, gen, k_j)
    serial = time.perf_counter() - start

    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        list(pool.map(lambda item: decode_layer(item[0], gen, item[1]), prepared))
    concurrent = time.perf_counter() - start

    logger.info(f"bench_decode({gen.mode}): ks={list(ks)} exponent={exponent}")
    return DecodeBenchmark(
        mode=gen.mode,
        timings=timings,
        fitted_exponent=exponent,
        serial_seconds=serial,
        concurrent_seconds=concurrent,
        note="decode solves a k_j x k_j system; cost grows like k_j^3 once the solve dominates",
    )
