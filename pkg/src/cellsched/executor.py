"""Real multithreaded execution with synthetic task durations.

Task bodies burn CPU through hashlib.pbkdf2_hmac, which drops the GIL for
the whole iteration loop, so threads genuinely run in parallel; a plain
Python spin loop would serialize on the interpreter lock, and sleeps have
scheduler-quantum floors that distort everything below ~1 ms. The
iteration count for a requested duration comes from a startup calibration
(affine model: per-call overhead plus per-iteration cost). Requests below
the per-call floor are executed and reported, not silently rounded up.

The contract under test: every task runs exactly once, only after its
predecessors, never concurrently with another task sharing one of its
resources, and nested spawns happen only after the parent completed. All
of it is checkable from the completion log plus optional in-run resource
flags.
"""

from __future__ import annotations

import hashlib
import heapq
import statistics
import threading
import time
import warnings
from dataclasses import dataclass, field

from .depgraph import SpawnRecord, TaskGraph, _DependenceState
from .grid import GridSpec, neighbor
from .payload import charges, intra_contribution, pair_contribution
from .taskgen import INTER, INTRA, REDUCE, NestedPlan, Task

MAX_DURATION_NS = 100_000_000  # 100 ms


def _burn(iterations: int) -> None:
    if iterations > 0:
        hashlib.pbkdf2_hmac("sha256", b"work", b"salt", iterations)


@dataclass(frozen=True)
class SpinCalibration:
    """Affine busy-work model: time(iters) = call_overhead_ns + iters * ns_per_iter."""

    ns_per_iter: float
    call_overhead_ns: float

    @property
    def floor_ns(self) -> float:
        """Shortest duration a task body can actually realize."""
        return self.call_overhead_ns

    def iterations(self, duration_ns: int) -> int:
        extra = duration_ns - self.call_overhead_ns
        if extra <= 0:
            return 0
        return max(1, round(extra / self.ns_per_iter))


_calibration: SpinCalibration | None = None
_calibration_lock = threading.Lock()


def calibrate(refresh: bool = False) -> SpinCalibration:
    """Measure the busy-work cost model once per process."""
    global _calibration
    with _calibration_lock:
        if _calibration is not None and not refresh:
            return _calibration
        small, large = 256, 16384
        _burn(large)  # warm up
        def med(iters: int) -> float:
            samples = []
            for _ in range(5):
                t0 = time.monotonic_ns()
                _burn(iters)
                samples.append(time.monotonic_ns() - t0)
            return statistics.median(samples)
        t_small, t_large = med(small), med(large)
        ns_per_iter = max((t_large - t_small) / (large - small), 1e-3)
        overhead = max(t_small - small * ns_per_iter, 200.0)
        _calibration = SpinCalibration(ns_per_iter, overhead)
        return _calibration


@dataclass(frozen=True)
class ExecConfig:
    """threads: worker count; duration_ns: busy-work per task; payload_seed:
    apply the integer payload when set; verify: assert per-resource
    exclusion with in-run lock flags."""

    threads: int
    duration_ns: int = 0
    payload_seed: int | None = None
    verify: bool = True

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if not 0 <= self.duration_ns <= MAX_DURATION_NS:
            raise ValueError(
                f"duration_ns must be within [0, {MAX_DURATION_NS}], got {self.duration_ns}"
            )


@dataclass(frozen=True)
class TaskRun:
    task_id: int
    worker: int
    start_ns: int
    end_ns: int


@dataclass
class ExecResult:
    """Wall-clock outcome of one execution."""

    wall_ns: int
    task_count: int
    threads: int
    duration_ns: int
    log: list[TaskRun] = field(repr=False)
    accumulators: dict[int, int] | None = None
    graph: TaskGraph | None = field(repr=False, default=None)
    spawn_log: list[SpawnRecord] | None = field(repr=False, default=None)
    notes: tuple[str, ...] = ()

    @property
    def efficiency(self) -> float:
        """Useful work over consumed capacity: tasks*duration / (threads*wall)."""
        return (self.task_count * self.duration_ns) / (self.threads * max(self.wall_ns, 1))


class _Engine:
    """Coordinator state shared by the worker threads.

    One lock/condition protects the ready heap, dependency counters, spawn
    bookkeeping, and the completion log; task bodies run outside it.
    """

    def __init__(self, cfg: ExecConfig, tasks: list[Task], grid: GridSpec | None):
        self.cfg = cfg
        self.iterations = calibrate().iterations(cfg.duration_ns) if cfg.duration_ns else 0
        self.cond = threading.Condition()
        self.tasks: list[Task] = list(tasks)
        self.succs: list[list[int]] = [[] for _ in tasks]
        self.indeg: list[int] = [0] * len(tasks)
        self.finished: list[bool] = [False] * len(tasks)
        self.ready: list[int] = []
        self.outstanding = len(tasks)
        self.log: list[TaskRun] = []
        self.failure: BaseException | None = None
        self.plan: NestedPlan | None = None
        self.state: _DependenceState | None = None
        self.edges: list[tuple[int, int]] = []
        self.spawn_log: list[SpawnRecord] = []
        self.res_locks: dict = {}
        self.grid = grid
        if cfg.payload_seed is not None:
            if grid is None:
                raise ValueError("payload execution needs the grid")
            self.q = charges(grid, cfg.payload_seed)
            self.acc: dict[int, int] | None = {c: 0 for c in grid.cells()}
            self.buffers: dict = {}
        else:
            self.acc = None

    # -- setup ---------------------------------------------------------

    def init_static(self, graph: TaskGraph) -> None:
        self.succs = [list(s) for s in graph.succs]
        self.indeg = [len(p) for p in graph.preds]
        self.ready = [t.id for t in graph.tasks if not graph.preds[t.id]]
        heapq.heapify(self.ready)

    def init_dynamic(self, plan: NestedPlan) -> None:
        self.plan = plan
        self.state = _DependenceState()
        initial = list(self.tasks)
        self.tasks = []
        self.succs = []
        self.indeg = []
        self.finished = []
        self.outstanding = 0
        for task in initial:
            self._spawn(task, None)

    def _spawn(self, task: Task, parent: int | None) -> None:
        # caller holds the lock (or is single threaded during setup)
        preds = self.state.add(task)
        self.tasks.append(task)
        self.spawn_log.append(SpawnRecord(task, parent, True))
        self.succs.append([])
        self.finished.append(False)
        waiting = 0
        for p in sorted(preds):
            self.edges.append((p, task.id))
            if not self.finished[p]:
                self.succs[p].append(task.id)
                waiting += 1
        self.indeg.append(waiting)
        self.outstanding += 1
        if waiting == 0:
            heapq.heappush(self.ready, task.id)

    # -- task body -----------------------------------------------------

    def _acquire_resources(self, task: Task):
        held = []
        for res in task.resources:
            lock = self.res_locks.setdefault(res, threading.Lock())
            if not lock.acquire(blocking=False):
                for h in held:
                    h.release()
                raise RuntimeError(
                    f"resource {res!r} held concurrently while task {task.id} ran"
                )
            held.append(lock)
        return held

    def _apply_payload(self, task: Task) -> None:
        if task.kind == INTRA:
            value = intra_contribution(self.q[task.home])
            res = next(iter(task.resources))
            if res[0] == "acc":
                self.acc[task.home] += value
            else:
                self.buffers[res] = self.buffers.get(res, 0) + value
        elif task.kind == INTER:
            nbr = neighbor(task.home, task.offset, self.grid)
            to_home, to_nbr = pair_contribution(self.q[task.home], self.q[nbr], task.offset)
            if any(r[0] == "buf" for r in task.resources):
                for res in task.resources:
                    value = to_home if res[2] == "out" else to_nbr
                    self.buffers[res] = self.buffers.get(res, 0) + value
            else:
                self.acc[task.home] += to_home
                self.acc[nbr] += to_nbr
        elif task.kind == REDUCE:
            self.acc[task.home] += sum(self.buffers.get(s, 0) for s in task.reads)

    def _run_body(self, task: Task) -> None:
        held = self._acquire_resources(task) if self.cfg.verify else []
        try:
            if self.acc is not None:
                self._apply_payload(task)
            _burn(self.iterations)
        finally:
            for lock in held:
                lock.release()

    # -- worker loop ----------------------------------------------------

    def worker(self, index: int) -> None:
        try:
            while True:
                with self.cond:
                    while not self.ready and self.outstanding > 0 and self.failure is None:
                        self.cond.wait()
                    if self.failure is not None or not self.ready:
                        return
                    tid = heapq.heappop(self.ready)
                task = self.tasks[tid]
                start = time.monotonic_ns()
                self._run_body(task)
                end = time.monotonic_ns()
                with self.cond:
                    self.log.append(TaskRun(tid, index, start, end))
                    self.finished[tid] = True
                    self.outstanding -= 1
                    for s in self.succs[tid]:
                        self.indeg[s] -= 1
                        if self.indeg[s] == 0:
                            heapq.heappush(self.ready, s)
                    if self.plan is not None:
                        child = self.plan.successor(task, len(self.tasks))
                        if child is not None:
                            self._spawn(child, tid)
                    self.cond.notify_all()
        except BaseException as exc:  # propagate to the coordinator
            with self.cond:
                if self.failure is None:
                    self.failure = exc
                self.cond.notify_all()


def execute(subject, cfg: ExecConfig, grid: GridSpec | None = None) -> ExecResult:
    """Run a TaskGraph or NestedPlan on cfg.threads worker threads.

    Returns the wall time, the completion log, the payload accumulators
    (when a payload seed is configured), and for plans the realized graph.
    """
    notes: list[str] = []
    if cfg.duration_ns:
        floor = calibrate().floor_ns
        if cfg.duration_ns < floor:
            msg = (
                f"requested task duration {cfg.duration_ns} ns is below the busy-work "
                f"floor of ~{floor:.0f} ns; tasks will run at the floor"
            )
            warnings.warn(msg, stacklevel=2)
            notes.append(msg)

    if isinstance(subject, NestedPlan):
        engine = _Engine(cfg, subject.initial_tasks(), grid or subject.grid)
        engine.init_dynamic(subject)
    else:
        if subject.task_count == 0:
            raise ValueError("cannot execute an empty graph")
        engine = _Engine(cfg, subject.tasks, grid)
        engine.init_static(subject)

    threads = [
        threading.Thread(target=engine.worker, args=(i,), name=f"cellsched-w{i}")
        for i in range(cfg.threads)
    ]
    t0 = time.monotonic_ns()
    started = []
    try:
        for t in threads:
            t.start()
            started.append(t)
    except Exception as exc:
        with engine.cond:
            engine.failure = RuntimeError(f"thread pool startup failed: {exc}")
            engine.cond.notify_all()
        for t in started:
            t.join()
        raise RuntimeError(f"thread pool startup failed: {exc}") from exc
    for t in threads:
        t.join()
    wall = time.monotonic_ns() - t0
    if engine.failure is not None:
        raise engine.failure

    realized = None
    spawn_log = None
    if isinstance(subject, NestedPlan):
        realized = TaskGraph(engine.tasks, tuple(sorted(engine.edges)))
        spawn_log = engine.spawn_log
    result = ExecResult(
        wall_ns=wall,
        task_count=len(engine.tasks),
        threads=cfg.threads,
        duration_ns=cfg.duration_ns,
        log=engine.log,
        accumulators=engine.acc,
        graph=realized,
        spawn_log=spawn_log,
        notes=tuple(notes),
    )
    if cfg.verify:
        verify_execution(result, realized if realized is not None else subject)
    return result


def verify_execution(result: ExecResult, graph: TaskGraph) -> None:
    """Post-run audit of the completion log: exactly-once execution,
    predecessor ordering, and per-resource interval exclusion."""
    seen = sorted(run.task_id for run in result.log)
    if seen != list(range(graph.task_count)):
        raise RuntimeError("execution log does not cover every task exactly once")
    times = {run.task_id: run for run in result.log}
    for u, v in graph.edges:
        if times[u].end_ns > times[v].start_ns:
            raise RuntimeError(f"task {v} started before its predecessor {u} finished")
    intervals: dict = {}
    for run in result.log:
        for res in graph.tasks[run.task_id].resources:
            intervals.setdefault(res, []).append((run.start_ns, run.end_ns, run.task_id))
    for res, spans in intervals.items():
        spans.sort()
        for (s1, e1, t1), (s2, e2, t2) in zip(spans, spans[1:]):
            if s2 < e1:
                raise RuntimeError(
                    f"tasks {t1} and {t2} overlapped on shared resource {res!r}"
                )


def measure_speedup(subject, cfg: ExecConfig, grid: GridSpec | None = None, repetitions: int = 3):
    """Median wall time at cfg.threads vs. a 1-thread baseline."""
    def med(threads: int) -> float:
        walls = []
        for _ in range(repetitions):
            c = ExecConfig(threads, cfg.duration_ns, cfg.payload_seed, cfg.verify)
            walls.append(execute(subject, c, grid).wall_ns)
        return statistics.median(walls)
    base = med(1)
    wall = med(cfg.threads)
    return base / wall, base, wall


@dataclass(frozen=True)
class SweepPoint:
    duration_ns: int
    wall_ns: float
    efficiency: float


def duration_sweep(
    subject,
    durations: list[int],
    threads: int,
    grid: GridSpec | None = None,
    repetitions: int = 3,
) -> tuple[list[SweepPoint], int | None]:
    """Efficiency per task duration (median of `repetitions` runs), plus
    the smallest duration reaching 90% efficiency (None if none does)."""
    points = []
    for duration in durations:
        walls = []
        count = 0
        for _ in range(repetitions):
            res = execute(subject, ExecConfig(threads, duration), grid)
            walls.append(res.wall_ns)
            count = res.task_count
        wall = statistics.median(walls)
        eff = (count * duration) / (threads * max(wall, 1))
        points.append(SweepPoint(duration, wall, eff))
    knee = None
    for p in sorted(points, key=lambda p: p.duration_ns):
        if p.efficiency >= 0.9:
            knee = p.duration_ns
            break
    return points, knee
