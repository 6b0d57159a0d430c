"""Message-passing execution of a coded job on n logical workers.

Each worker runs its r coded tasks in layer order and sends every result on its own
channel. Delays advance a virtual clock, so the reported times do not depend on how the
event loop interleaves the workers. The master merges the channels by (virtual time,
worker) and decodes layer j as soon as its k_j-th result arrives.
"""

import asyncio
import logging
from dataclasses import dataclass, field

import numpy as np

from strata.config import settings
from strata.errors import HarnessTimeoutError, IncompleteJobError, NumericalFailureError
from strata.models.codec import EncodedTask, GeneratorSpec, LayerPlan, LinearJob
from strata.models.results import HarnessReport, TrialResult, WorkerTimes
from strata.models.system import SchemeId, StragglerModel
from strata.services.codec import assemble, compute_task, decode_layer, encode_job
from strata.services.simulator import sample_layer_done_per_task, sample_worker_times

logger = logging.getLogger(__name__)


@dataclass(order=True, frozen=True)
class _Message:
    time: float
    worker: int
    result: EncodedTask | None = field(default=None, compare=False)


async def _worker(
    worker: int,
    tasks: list[EncodedTask],
    x: np.ndarray,
    gen: GeneratorSpec,
    finish_times: list[float],
    channel: asyncio.Queue,
    crash_after: int | None,
    wall_clock: bool,
    time_scale: float,
) -> None:
    previous = 0.0
    for j, task in enumerate(tasks):
        if crash_after is not None and j >= crash_after:
            logger.debug(f"worker {worker} crashed after {j} tasks")
            break
        finish = finish_times[j]
        await asyncio.sleep((finish - previous) * time_scale if wall_clock else 0)
        previous = finish
        await channel.put(_Message(finish, worker, compute_task(task, x, gen)))
    await channel.put(None)


class _Master:
    def __init__(self, plan: LayerPlan, gen: GeneratorSpec):
        self.plan = plan
        self.gen = gen
        self.pending: list[list[EncodedTask]] = [[] for _ in range(plan.alloc.r)]
        self.decoded: list[np.ndarray | None] = [None] * plan.alloc.r
        self.done_at: list[float | None] = [None] * plan.alloc.r
        self.order: list[int] = []
        self.messages = 0

    @property
    def complete(self) -> bool:
        return all(layer is not None for layer in self.decoded)

    def receive(self, message: _Message) -> None:
        self.messages += 1
        result = message.result
        j = result.layer
        self.pending[j].append(result)
        k_j = self.plan.alloc.ks[j]
        if self.decoded[j] is None and len(self.pending[j]) == k_j:
            self.decoded[j] = decode_layer(self.pending[j], self.gen, k_j)
            self.done_at[j] = message.time
            self.order.append(j)
            logger.info(f"layer {j + 1} decoded at t={message.time:.6g} from workers "
                        f"{sorted(res.worker for res in self.pending[j])}")

    def undecoded(self) -> list[int]:
        return [j + 1 for j, layer in enumerate(self.decoded) if layer is None]


async def _run(
    job: LinearJob,
    plan: LayerPlan,
    gen: GeneratorSpec,
    finish_times: np.ndarray,
    crashes: dict[int, int],
    deadline: float | None,
    wall_clock: bool,
    time_scale: float,
) -> _Master:
    coded = encode_job(job, plan, gen)
    channels = [asyncio.Queue() for _ in range(gen.n)]
    workers = [
        asyncio.create_task(
            _worker(
                i,
                coded[i],
                job.input,
                gen,
                [float(t) for t in finish_times[i]],
                channels[i],
                crashes.get(i),
                wall_clock,
                time_scale,
            )
        )
        for i in range(gen.n)
    ]
    master = _Master(plan, gen)
    try:
        heads = {i: await channels[i].get() for i in range(gen.n)}
        heads = {i: head for i, head in heads.items() if head is not None}
        while heads:
            worker = min(heads, key=lambda i: heads[i])
            message = heads[worker]
            if deadline is not None and message.time > deadline and not master.complete:
                raise HarnessTimeoutError(
                    f"layers {master.undecoded()} still undecoded at deadline {deadline}"
                )
            master.receive(message)
            following = await channels[worker].get()
            if following is None:
                del heads[worker]
            else:
                heads[worker] = following
    finally:
        for task in workers:
            task.cancel()
        await asyncio.gather(*workers, return_exceptions=True)
    return master


def run_execution_harness(
    job: LinearJob,
    plan: LayerPlan,
    gen: GeneratorSpec,
    m: StragglerModel,
    seed: int,
    *,
    crashes: dict[int, int] | None = None,
    deadline: float | None = None,
    per_task_draws: bool = False,
    wall_clock: bool = False,
    time_scale: float = 0.01,
) -> HarnessReport:
    """Encode `job`, run it on n workers with sampled delays and decode every layer.

    `crashes` maps a worker index to the number of tasks it completes before going
    silent. A layer that can no longer gather k_j results raises IncompleteJobError once
    every channel is closed, or HarnessTimeoutError when the next event lies past
    `deadline` (virtual time).
    """
    deadline = settings.harness_deadline if deadline is None else deadline
    times = sample_worker_times(m, gen.n, seed)
    if per_task_draws:
        finish_times = sample_layer_done_per_task(m, gen.n, plan.alloc.r, seed)
    else:
        finish_times = np.array(
            [[(j + 1) * t for j in range(plan.alloc.r)] for t in times.t_i]
        )

    master = asyncio.run(
        _run(job, plan, gen, finish_times, crashes or {}, deadline, wall_clock, time_scale)
    )
    if not master.complete:
        raise IncompleteJobError(
            f"layers {master.undecoded()} cannot be decoded: every channel closed early"
        )

    output = assemble(master.decoded, plan)
    expected = job.direct()
    matches = (
        np.array_equal(output, expected)
        if gen.mode == "prime"
        else np.allclose(output, expected, rtol=1e-6, atol=1e-9)
    )
    if not matches:
        raise NumericalFailureError(
            "decoded output differs from the direct product",
            {"max_abs_error": float(np.max(np.abs(output - expected)))},
        )

    done = tuple(master.done_at)
    return HarnessReport(
        decoded_output=output,
        trial=TrialResult(tau=max(done), per_layer_done=done, scheme=SchemeId.HIERARCHICAL),
        messages=master.messages,
        worker_times=WorkerTimes(
            t_i=tuple(float(t) for t in finish_times[:, 0]), shift=m.shift
        ),
        decode_order=tuple(master.order),
    )
