"""Shared test helpers: independent oracles the implementation never sees."""

from __future__ import annotations

import networkx as nx
import pytest

from cellsched.depgraph import TaskGraph


def to_networkx(graph: TaskGraph) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(t.id for t in graph.tasks)
    g.add_edges_from(graph.edges)
    return g


def longest_path_oracle(graph: TaskGraph) -> int:
    """Longest path in task count, via networkx (independent of the DP in
    depgraph)."""
    if not graph.tasks:
        return 0
    return nx.dag_longest_path_length(to_networkx(graph)) + 1


def assert_edges_justified(graph: TaskGraph) -> None:
    """Every edge must share a resource, with at least one side writing it."""
    for u, v in graph.edges:
        tu, tv = graph.tasks[u], graph.tasks[v]
        war_raw = tu.touched() & tv.resources
        raw = tu.resources & tv.reads
        assert war_raw or raw, f"edge ({u}, {v}) shares no written resource"


def reachability(graph: TaskGraph) -> dict[int, set[int]]:
    """id -> set of ids reachable from it (including itself)."""
    reach: dict[int, set[int]] = {}
    for v in range(graph.task_count - 1, -1, -1):
        r = {v}
        for s in graph.succs[v]:
            r |= reach[s]
        reach[v] = r
    return reach


def assert_resource_chains_serialized(graph: TaskGraph) -> None:
    """Accessors of any single resource must form a total order under
    reachability."""
    reach = reachability(graph)
    by_resource: dict = {}
    for t in graph.tasks:
        for res in t.resources:
            by_resource.setdefault(res, []).append(t.id)
    for res, ids in by_resource.items():
        ids.sort()
        for a, b in zip(ids, ids[1:]):
            assert b in reach[a], f"accessors {a}, {b} of {res!r} are unordered"


def assert_work_conserving(result, graph: TaskGraph) -> None:
    """Whenever a worker idles, no task may be ready: replay the timeline
    and check each underfull step."""
    start = {}
    for lane in result.timeline:
        for t, tid in lane:
            start[tid] = t
    assert sorted(start) == list(range(graph.task_count))
    per_step: dict[int, int] = {}
    for t in start.values():
        per_step[t] = per_step.get(t, 0) + 1
    for step in range(result.makespan):
        if per_step.get(step, 0) >= result.workers:
            continue
        for t in graph.tasks:
            if start[t.id] <= step:
                continue
            ready = all(start[p] + 1 <= step for p in graph.preds[t.id])
            assert not ready, f"task {t.id} was ready at {step} while a worker idled"


@pytest.fixture
def quiet_warnings():
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield
