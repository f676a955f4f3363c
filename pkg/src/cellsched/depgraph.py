"""Automatic dependency detection from resource access order.

The detector mimics a dependency-aware runtime: it walks the task stream in
creation order and links tasks that touch the same resource. Updated
(inout) resources serialize: consecutive accessors of a resource are
chained, which is what makes task creation order matter in the first
place. Read-only accesses depend on the last writer but not on each other.

Graphs can be built statically from a full task list or dynamically from a
spawn log, where the same rule is applied at spawn time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .taskgen import NestedPlan, Task


class _DependenceState:
    """Last-writer/readers-since-write table shared by static and dynamic
    detection."""

    def __init__(self) -> None:
        self._last_writer: dict = {}
        self._readers: dict = {}

    def add(self, task: Task) -> set[int]:
        """Record `task` and return the ids of its direct predecessors."""
        preds: set[int] = set()
        for res in task.reads:
            if res in task.resources:
                continue  # inout wins; avoid a self-edge below
            writer = self._last_writer.get(res)
            if writer is not None:
                preds.add(writer)
            self._readers.setdefault(res, []).append(task.id)
        for res in task.resources:
            readers = self._readers.get(res)
            if readers:
                preds.update(readers)
            else:
                writer = self._last_writer.get(res)
                if writer is not None:
                    preds.add(writer)
            self._last_writer[res] = task.id
            self._readers[res] = []
        preds.discard(task.id)
        return preds


@dataclass
class TaskGraph:
    """Dependency DAG over a task stream.

    Tasks are indexed by id; every edge runs from a lower id to a higher id
    (creation order statically, spawn order dynamically) and is justified
    by a resource shared between its endpoints.
    """

    tasks: list[Task]
    edges: tuple[tuple[int, int], ...]
    preds: list[list[int]] = field(repr=False, default_factory=list)
    succs: list[list[int]] = field(repr=False, default_factory=list)

    def __post_init__(self) -> None:
        n = len(self.tasks)
        if not self.preds:
            self.preds = [[] for _ in range(n)]
            self.succs = [[] for _ in range(n)]
            for u, v in self.edges:
                if not (0 <= u < v < n):
                    raise ValueError(f"edge ({u}, {v}) violates id ordering")
                self.preds[v].append(u)
                self.succs[u].append(v)
            for lst in self.preds:
                lst.sort()
            for lst in self.succs:
                lst.sort()

    @property
    def task_count(self) -> int:
        return len(self.tasks)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def roots(self) -> list[int]:
        return [t.id for t in self.tasks if not self.preds[t.id]]

    def sinks(self) -> list[int]:
        return [t.id for t in self.tasks if not self.succs[t.id]]


def _validate_ids(tasks: list[Task]) -> None:
    for i, t in enumerate(tasks):
        if t.id != i:
            raise ValueError(f"task ids must be dense and increasing; position {i} has id {t.id}")


def detect_dependencies(tasks: list[Task]) -> TaskGraph:
    """Build the DAG a dependency-aware runtime would extract from the
    stream.

    For purely inout streams (every generated interaction stream) this
    fully serializes each resource's access chain: every pair of
    consecutive accessors is linked. Duplicate edges collapse; transitively
    implied ones are kept.
    """
    _validate_ids(tasks)
    state = _DependenceState()
    edges = []
    for task in tasks:
        for p in sorted(state.add(task)):
            edges.append((p, task.id))
    return TaskGraph(list(tasks), tuple(edges))


@dataclass(frozen=True)
class SpawnRecord:
    """One serialized spawn event: `task` entered the system, spawned by
    `parent` (None for initial tasks), which had already completed."""

    task: Task
    parent: int | None
    parent_completed: bool = True


def detect_dependencies_dynamic(plan: NestedPlan, spawn_log: list[SpawnRecord]) -> TaskGraph:
    """Replay a serialized spawn log, applying the last-accessor rule at
    spawn time. Raises if the log violates the spawn contract."""
    tasks = [rec.task for rec in spawn_log]
    _validate_ids(tasks)
    state = _DependenceState()
    edges = []
    for rec in spawn_log:
        task = rec.task
        if rec.parent is not None:
            if rec.parent >= task.id:
                raise RuntimeError(
                    f"task {task.id} spawned by later task {rec.parent}; log not serialized"
                )
            if not rec.parent_completed:
                raise RuntimeError(
                    f"task {task.id} spawned before parent {rec.parent} completed"
                )
            parent = tasks[rec.parent]
            if parent.home != task.home:
                raise RuntimeError(
                    f"task {task.id} spawned by a different cell's chain ({rec.parent})"
                )
            if plan.chain_position(parent) >= plan.chain_position(task):
                raise RuntimeError(f"task {task.id} does not advance its cell's chain")
        for p in sorted(state.add(task)):
            edges.append((p, task.id))
    return TaskGraph(tasks, tuple(edges))


def critical_path(graph: TaskGraph) -> int:
    """Number of tasks on the longest path, with unit task durations.

    Edges always run low id -> high id, so a single forward sweep works.
    """
    if not graph.tasks:
        return 0
    length = [1] * graph.task_count
    for v in range(graph.task_count):
        for u in graph.preds[v]:
            if u >= v:
                raise RuntimeError(f"cycle suspected: edge ({u}, {v}) is not forward")
            if length[u] + 1 > length[v]:
                length[v] = length[u] + 1
    return max(length)


def _transitive_reduction(graph: TaskGraph) -> set[tuple[int, int]]:
    # longest-path lengths between endpoints decide redundancy: an edge
    # (u, v) is redundant iff some other path u -> v exists
    keep = set()
    for u, v in graph.edges:
        stack = [w for w in graph.succs[u] if w != v and w < v]
        seen = set(stack)
        reachable = False
        while stack:
            w = stack.pop()
            if w == v:
                reachable = True
                break
            for x in graph.succs[w]:
                if x <= v and x not in seen:
                    seen.add(x)
                    stack.append(x)
        if not reachable:
            keep.add((u, v))
    return keep


def export_dot(graph: TaskGraph, transitive_reduction: bool = False) -> str:
    """Render the graph as DOT text, stable and diff-friendly (ordered by
    id). `transitive_reduction` drops edges implied by longer paths, which
    makes wide stencil graphs readable."""
    lines = ["digraph tasks {", "  rankdir=TB;"]
    for t in graph.tasks:
        label = f"{t.id} {t.kind}"
        if t.home is not None:
            label += f" c{t.home}"
        if t.offset is not None:
            label += " (" + ",".join(str(c) for c in t.offset) + ")"
        lines.append(f'  t{t.id} [label="{label}"];')
    edges = set(graph.edges)
    if transitive_reduction:
        edges = _transitive_reduction(graph)
    for u, v in sorted(edges):
        lines.append(f"  t{u} -> t{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"
