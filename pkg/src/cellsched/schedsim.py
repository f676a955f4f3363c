"""Deterministic list-scheduling simulator with unit task durations.

Models what a dependency-aware runtime's worker pool would do: at every
time step, ready tasks (all predecessors finished) are handed to idle
workers in ascending task-id order, the runtime's list-scan behavior. The
simulator is single threaded; it models parallelism rather than using it.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .depgraph import SpawnRecord, TaskGraph, _DependenceState
from .taskgen import NestedPlan, Task


@dataclass(frozen=True)
class SimConfig:
    """Worker count; every task takes exactly one time unit."""

    workers: int

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class SimResult:
    """Outcome of one simulated schedule.

    speedup = serial_time / makespan; with unlimited workers the makespan
    equals the critical path length. timeline[w] lists (start_time, task_id)
    per worker.
    """

    makespan: int
    serial_time: int
    workers: int
    timeline: list[list[tuple[int, int]]] = field(repr=False)
    graph: TaskGraph | None = field(repr=False, default=None)
    spawn_log: list[SpawnRecord] | None = field(repr=False, default=None)

    @property
    def speedup(self) -> float:
        return self.serial_time / self.makespan

    @property
    def utilization(self) -> float:
        return self.serial_time / (self.workers * self.makespan)

    def execution_order(self) -> list[int]:
        """Task ids sorted by (start time, worker): the order a payload
        replay applies them in."""
        slots = []
        for w, lane in enumerate(self.timeline):
            for t, tid in lane:
                slots.append((t, w, tid))
        return [tid for _, _, tid in sorted(slots)]


def simulate(graph: TaskGraph, cfg: SimConfig) -> SimResult:
    """Greedy work-conserving schedule of a static task graph."""
    n = graph.task_count
    if n == 0:
        raise ValueError("cannot simulate an empty graph")
    workers = cfg.workers
    indeg = [len(graph.preds[v]) for v in range(n)]
    ready = [v for v in range(n) if indeg[v] == 0]
    heapq.heapify(ready)
    timeline: list[list[tuple[int, int]]] = [[] for _ in range(workers)]
    now = 0
    done = 0
    while ready:
        batch = []
        while ready and len(batch) < workers:
            batch.append(heapq.heappop(ready))
        for w, tid in enumerate(batch):
            timeline[w].append((now, tid))
        now += 1
        done += len(batch)
        for tid in batch:
            for s in graph.succs[tid]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    heapq.heappush(ready, s)
    if done != n:
        raise RuntimeError(f"schedule stalled with {n - done} tasks blocked; graph has a cycle")
    return SimResult(makespan=now, serial_time=n, workers=workers, timeline=timeline)


def simulate_dynamic(plan: NestedPlan, cfg: SimConfig) -> SimResult:
    """Schedule a nested plan, spawning each chain's next task when its
    predecessor task completes.

    Spawn events are serialized by (completion time, parent id); dependency
    detection happens at spawn time against already-spawned tasks only, so
    the realized graph is acyclic in spawn order. The result carries the
    realized graph and the spawn log.
    """
    workers = cfg.workers
    state = _DependenceState()
    tasks: list[Task] = []
    edges: list[tuple[int, int]] = []
    log: list[SpawnRecord] = []
    indeg: list[int] = []
    finished: list[bool] = []
    succs: list[list[int]] = []
    ready: list[int] = []

    def spawn(task: Task, parent: int | None) -> None:
        preds = state.add(task)
        tasks.append(task)
        log.append(SpawnRecord(task, parent, True))
        succs.append([])
        finished.append(False)
        waiting = 0
        for p in sorted(preds):
            edges.append((p, task.id))
            if not finished[p]:
                succs[p].append(task.id)
                waiting += 1
        indeg.append(waiting)
        if waiting == 0:
            heapq.heappush(ready, task.id)

    for task in plan.initial_tasks():
        spawn(task, None)

    timeline: list[list[tuple[int, int]]] = [[] for _ in range(workers)]
    now = 0
    done = 0
    while ready:
        batch = []
        while ready and len(batch) < workers:
            batch.append(heapq.heappop(ready))
        for w, tid in enumerate(batch):
            timeline[w].append((now, tid))
        now += 1
        done += len(batch)
        for tid in batch:
            finished[tid] = True
        for tid in batch:
            for s in succs[tid]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    heapq.heappush(ready, s)
        for tid in batch:  # ascending parent id: the serialized spawn order
            child = plan.successor(tasks[tid], len(tasks))
            if child is not None:
                spawn(child, tid)
    if done != len(tasks):
        raise RuntimeError("dynamic schedule stalled; spawn bookkeeping is inconsistent")
    graph = TaskGraph(tasks, tuple(edges))
    return SimResult(
        makespan=now,
        serial_time=len(tasks),
        workers=workers,
        timeline=timeline,
        graph=graph,
        spawn_log=log,
    )


def speedup_curve(subject, workers: list[int]) -> list[tuple[int, SimResult]]:
    """One simulation per worker count; static graphs and nested plans both
    accepted."""
    out = []
    for w in workers:
        cfg = SimConfig(w)
        if isinstance(subject, NestedPlan):
            out.append((w, simulate_dynamic(subject, cfg)))
        else:
            out.append((w, simulate(subject, cfg)))
    return out


def unlimited_workers(subject) -> SimConfig:
    """A worker count that can never be the bottleneck (one per task)."""
    if isinstance(subject, NestedPlan):
        n = subject.grid.cell_count * subject.order.n
    else:
        n = subject.task_count
    return SimConfig(max(1, n))
