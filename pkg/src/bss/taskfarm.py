"""Master-worker task farm with broadcast and scatter-gather distribution.

Workers are threads owned by one run. The collective semantics are kept
explicit: under broadcast every worker holds the full task tuple and keeps
the indices congruent to its rank; under scatter-gather each worker is handed
only its contiguous block and the root concatenates blocks in rank order.
Entry and exit barriers delimit the timed region.
"""
from __future__ import annotations

import threading
import time
import traceback
from dataclasses import dataclass, field
from enum import Enum

from .errors import BarrierTimeout


class Strategy(str, Enum):
    BROADCAST = "broadcast"
    SCATTER = "scatter"


@dataclass(frozen=True)
class FarmConfig:
    workers: int = 1
    strategy: Strategy = Strategy.BROADCAST
    level: int = 1
    barrier_timeout: float | None = None

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.level not in (1, 2):
            raise ValueError("level must be 1 or 2")
        object.__setattr__(self, "strategy", Strategy(self.strategy))


@dataclass
class TaskOutcome:
    index: int
    worker: int
    value: object = None
    error: str | None = None
    started: float = 0.0
    finished: float = 0.0
    traceback: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class FarmRun:
    outcomes: list
    started: float
    stopped: float
    per_worker: list = field(default_factory=list)

    @property
    def results(self):
        return [o.value for o in self.outcomes]

    @property
    def ok(self) -> bool:
        return all(o.ok for o in self.outcomes)

    @property
    def wall_seconds(self) -> float:
        return self.stopped - self.started


class Barrier:
    """Reusable barrier for a fixed group of members ``0..parties-1``.

    ``action`` runs in the last arriving thread before anyone is released. On
    timeout every waiter raises ``BarrierTimeout`` naming the absent members.
    """

    def __init__(self, parties: int, timeout: float | None = None, action=None):
        if parties < 1:
            raise ValueError("parties must be >= 1")
        self.parties = parties
        self.timeout = timeout
        self.action = action
        self._cond = threading.Condition()
        self._arrived: set = set()
        self._generation = 0
        self._broken: BarrierTimeout | None = None

    def wait(self, member: int) -> None:
        with self._cond:
            if self._broken is not None:
                raise self._broken
            gen = self._generation
            self._arrived.add(member)
            if len(self._arrived) == self.parties:
                if self.action is not None:
                    self.action()
                self._arrived = set()
                self._generation += 1
                self._cond.notify_all()
                return
            deadline = None if self.timeout is None else time.monotonic() + self.timeout
            while self._generation == gen and self._broken is None:
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    self._broken = BarrierTimeout(set(range(self.parties)) - self._arrived)
                    self._cond.notify_all()
                    break
                self._cond.wait(remaining)
            if self._generation == gen:
                raise self._broken


def block_partition(n_tasks: int, n_workers: int) -> list[tuple[int, int]]:
    """Contiguous ``[start, stop)`` blocks; the first ``n_tasks % n_workers`` get one extra."""
    base, extra = divmod(n_tasks, n_workers)
    bounds, start = [], 0
    for r in range(n_workers):
        size = base + (1 if r < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def broadcast_share(n_tasks: int, n_workers: int, rank: int) -> list[int]:
    return list(range(rank, n_tasks, n_workers))


def _run_one(index, task, rank, work_fn):
    out = TaskOutcome(index=index, worker=rank, started=time.perf_counter())
    try:
        out.value = work_fn(task)
    except Exception as exc:  # fail-soft: the slot carries the error
        out.error = f"{type(exc).__name__}: {exc}"
        out.value = None
        out.traceback = traceback.format_exc()
    out.finished = time.perf_counter()
    return out


def _farm(n_workers, barrier_timeout, worker_body):
    """Start ``n_workers`` threads around a barrier-delimited region.

    ``worker_body(rank)`` returns that worker's list of outcomes; the root
    returns them per rank together with the timer readings.
    """
    clock = {}
    enter = Barrier(n_workers, barrier_timeout, action=lambda: clock.__setitem__("start", time.perf_counter()))
    leave = Barrier(n_workers, barrier_timeout, action=lambda: clock.__setitem__("stop", time.perf_counter()))
    channels: list = [None] * n_workers
    failures: list = [None] * n_workers

    def body(rank):
        try:
            enter.wait(rank)
            channels[rank] = worker_body(rank)
            leave.wait(rank)
        except BaseException as exc:  # reported to the root below
            failures[rank] = exc

    if n_workers == 1:
        body(0)
    else:
        threads = [threading.Thread(target=body, args=(r,), name=f"bss-worker-{r}", daemon=True)
                   for r in range(n_workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    for exc in failures:
        if exc is not None:
            raise exc
    return channels, clock["start"], clock["stop"]


def broadcast_run(tasks, config: FarmConfig, work_fn) -> FarmRun:
    """Every worker sees all tasks and runs those with ``index % workers == rank``."""
    shared = tuple(tasks)
    p = config.workers

    def worker_body(rank):
        view = shared  # full view, as after a broadcast
        return [_run_one(i, view[i], rank, work_fn) for i in broadcast_share(len(view), p, rank)]

    channels, t0, t1 = _farm(p, config.barrier_timeout, worker_body)
    outcomes = sorted((o for ch in channels for o in ch), key=lambda o: o.index)
    return FarmRun(outcomes, t0, t1, [len(ch) for ch in channels])


def scatter_gather_run(tasks, config: FarmConfig, work_fn) -> FarmRun:
    """Root scatters contiguous blocks; gathering in rank order restores task order."""
    tasks = list(tasks)
    p = config.workers
    blocks = block_partition(len(tasks), p)
    chunks = [tuple(enumerate(tasks))[lo:hi] for lo, hi in blocks]

    def worker_body(rank):
        chunk = chunks[rank]  # only this worker's block
        return [_run_one(i, task, rank, work_fn) for i, task in chunk]

    channels, t0, t1 = _farm(p, config.barrier_timeout, worker_body)
    outcomes = [o for ch in channels for o in ch]
    return FarmRun(outcomes, t0, t1, [len(ch) for ch in channels])


def run_tasks(tasks, config: FarmConfig, work_fn) -> FarmRun:
    if config.strategy is Strategy.BROADCAST:
        return broadcast_run(tasks, config, work_fn)
    return scatter_gather_run(tasks, config, work_fn)


@dataclass
class LevelRun:
    results: list
    wall_seconds: float
    farm_runs: list


def run_level(pair_tasks, config: FarmConfig, pipeline) -> LevelRun:
    """Run all pairs at the configured parallelization level.

    ``pipeline`` provides ``prepare(pair) -> (state, items)``,
    ``evaluate(item) -> value`` and ``finish(state, outcomes) -> result``.
    Level 1 farms out whole pairs; level 2 prepares and finishes each pair at
    the root and farms out only that pair's items.
    """
    pair_tasks = list(pair_tasks)
    if config.level == 1:
        def whole_pair(pair):
            state, items = pipeline.prepare(pair)
            outcomes = [_run_one(i, item, 0, pipeline.evaluate) for i, item in enumerate(items)]
            return pipeline.finish(state, outcomes)

        run = run_tasks(pair_tasks, config, whole_pair)
        results = [o.value if o.ok else pipeline.failed(pair, o.error)
                   for pair, o in zip(pair_tasks, run.outcomes)]
        return LevelRun(results, run.wall_seconds, [run])

    results, runs = [], []
    t0 = time.perf_counter()
    for pair in pair_tasks:
        state, items = pipeline.prepare(pair)
        if items:
            run = run_tasks(items, config, pipeline.evaluate)
            runs.append(run)
            outcomes = run.outcomes
        else:
            outcomes = []
        results.append(pipeline.finish(state, outcomes))
    return LevelRun(results, time.perf_counter() - t0, runs)
