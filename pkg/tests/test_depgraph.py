import pytest

from conftest import (
    assert_edges_justified,
    assert_resource_chains_serialized,
    longest_path_oracle,
    reachability,
    to_networkx,
)

from cellsched.depgraph import (
    SpawnRecord,
    TaskGraph,
    critical_path,
    detect_dependencies,
    detect_dependencies_dynamic,
    export_dot,
)
from cellsched.grid import GridSpec
from cellsched.schedsim import SimConfig, simulate_dynamic
from cellsched.taskgen import (
    StencilOrder,
    Task,
    bad_order,
    generate_basic,
    generate_buffered,
    generate_loopex,
    nested_plan,
    order_with_displacement,
)


def make_task(i, kind="t", reads=(), writes=()):
    return Task(i, kind, None, None, frozenset(writes), frozenset(reads))


def vector_example():
    """Six-call program: three generators, two adders sharing one input,
    one final dot product."""
    return [
        make_task(0, "unit_vec", writes={"a"}),
        make_task(1, "unit_vec", writes={"b"}),
        make_task(2, "unit_vec", writes={"c"}),
        make_task(3, "vec_add", reads={"b"}, writes={"c"}),
        make_task(4, "vec_add", reads={"a", "b"}, writes={"d"}),
        make_task(5, "scalar_product", reads={"c", "d"}, writes={"s"}),
    ]


class TestVectorExample:
    def test_exact_edges(self):
        g = detect_dependencies(vector_example())
        assert set(g.edges) == {(0, 4), (1, 3), (1, 4), (2, 3), (3, 5), (4, 5)}

    def test_shape(self):
        g = detect_dependencies(vector_example())
        assert g.roots() == [0, 1, 2]
        assert g.sinks() == [5]
        mids = [v for v in (3, 4) if len(g.preds[v]) == 2]
        assert mids == [3, 4]
        assert critical_path(g) == 3

    def test_shared_read_does_not_serialize(self):
        # both adders read b; neither waits for the other
        g = detect_dependencies(vector_example())
        assert (3, 4) not in g.edges and (4, 3) not in g.edges


def test_disjoint_tasks_no_edges():
    g = detect_dependencies([make_task(0, writes={"x"}), make_task(1, writes={"y"})])
    assert g.edges == ()


def test_inout_chain_fully_serializes():
    tasks = [make_task(i, writes={"r"}) for i in range(6)]
    g = detect_dependencies(tasks)
    assert set(g.edges) == {(i, i + 1) for i in range(5)}


def test_duplicate_edges_collapse():
    g = detect_dependencies(
        [make_task(0, writes={"a", "b"}), make_task(1, writes={"a", "b"})]
    )
    assert g.edges == ((0, 1),)


def test_ids_must_be_dense():
    bad = [make_task(0, writes={"a"}), make_task(2, writes={"b"})]
    with pytest.raises(ValueError):
        detect_dependencies(bad)


def test_row_domain_chains_inter_x_tasks():
    # brute-force edge audit on a 1x6 non-periodic row with +x evaluated last
    g = GridSpec((6, 1), periodic=False)
    graph = detect_dependencies(generate_basic(g, bad_order()))
    inter = [t.id for t in graph.tasks if t.kind == "inter"]
    chain_edges = {(u, v) for u, v in zip(inter, inter[1:])}
    assert chain_edges <= set(graph.edges)
    reach = reachability(graph)
    for a, b in zip(inter, inter[1:]):
        assert b in reach[a]
    assert critical_path(graph) == graph.task_count  # one full chain


@pytest.mark.parametrize("n", [1, 7])
def test_critical_path_trivial_shapes(n):
    independent = detect_dependencies([make_task(i, writes={f"r{i}"}) for i in range(n)])
    assert critical_path(independent) == 1
    chain = detect_dependencies([make_task(i, writes={"r"}) for i in range(n)])
    assert critical_path(chain) == n


def test_critical_path_matches_oracle_on_strategy_graphs():
    g = GridSpec((6, 4))
    for graph in (
        detect_dependencies(generate_basic(g, bad_order())),
        detect_dependencies(generate_loopex(g)),
        detect_dependencies(generate_buffered(g)),
    ):
        assert critical_path(graph) == longest_path_oracle(graph)


def test_strip_critical_path_tracks_displacement_formula():
    # quasi-1D strips: the x-fastest traversal chains the whole domain, so
    # the path length follows n + delta*(k-1) with k the total cell count
    # (wrap couplings trim a few percent)
    n = 5
    for k_row, delta in ((10, 5), (10, 2), (12, 3)):
        g = GridSpec((k_row, 3))
        graph = detect_dependencies(generate_basic(g, order_with_displacement(2, delta)))
        cp = critical_path(graph)
        assert cp == longest_path_oracle(graph)
        formula = n + delta * (g.cell_count - 1)
        assert abs(cp - formula) / formula <= 0.05, (k_row, delta, cp, formula)


def test_large_domain_critical_path_within_five_percent():
    g = GridSpec((20, 20))
    for delta in (1, 3, 5):
        graph = detect_dependencies(generate_basic(g, order_with_displacement(2, delta)))
        formula = 5 + delta * (g.cell_count - 1)
        assert abs(critical_path(graph) - formula) / formula <= 0.05


def test_edges_justified_and_chains_serialized_everywhere():
    g = GridSpec((4, 4))
    graphs = [
        detect_dependencies(vector_example()),
        detect_dependencies(generate_basic(g, bad_order())),
        detect_dependencies(generate_loopex(g)),
        detect_dependencies(generate_buffered(g)),
        simulate_dynamic(nested_plan(g), SimConfig(3)).graph,
    ]
    for graph in graphs:
        assert_edges_justified(graph)
        assert_resource_chains_serialized(graph)


class TestDynamicDetection:
    def test_single_cell(self):
        plan = nested_plan(GridSpec((1, 1), periodic=False))
        result = simulate_dynamic(plan, SimConfig(2))
        assert result.graph.task_count == 1
        assert result.graph.edges == ()

    def test_two_cell_row(self, quiet_warnings):
        # intra tasks independent; inter tasks serialize on the shared
        # accumulators
        plan = nested_plan(GridSpec((2, 1)))
        result = simulate_dynamic(plan, SimConfig(2))
        graph = result.graph
        intra = [t.id for t in graph.tasks if t.kind == "intra"]
        assert len(intra) == 2
        assert not any((a, b) in graph.edges or (b, a) in graph.edges
                       for a in intra for b in intra if a != b)
        inter = [t.id for t in graph.tasks if t.kind == "inter"]
        reach = reachability(graph)
        for a in inter:
            for b in inter:
                if a < b and graph.tasks[a].resources & graph.tasks[b].resources:
                    assert b in reach[a]
        assert_edges_justified(graph)

    def test_replay_reproduces_realized_graph(self):
        plan = nested_plan(GridSpec((4, 4)))
        result = simulate_dynamic(plan, SimConfig(3))
        replayed = detect_dependencies_dynamic(plan, result.spawn_log)
        assert replayed.edges == result.graph.edges
        assert [t.id for t in replayed.tasks] == [t.id for t in result.graph.tasks]

    def test_same_task_multiset_as_static(self):
        g = GridSpec((4, 4))
        plan = nested_plan(g)
        realized = simulate_dynamic(plan, SimConfig(5)).graph.tasks
        static = generate_basic(g, plan.order)
        sig = lambda ts: sorted((t.kind, t.home, t.offset, tuple(sorted(t.resources))) for t in ts)
        assert sig(realized) == sig(static)

    def test_contract_violations_raise(self):
        plan = nested_plan(GridSpec((3, 3)))
        result = simulate_dynamic(plan, SimConfig(2))
        log = result.spawn_log
        tampered = list(log)
        victim = next(i for i, r in enumerate(tampered) if r.parent is not None)
        rec = tampered[victim]
        tampered[victim] = SpawnRecord(rec.task, rec.parent, parent_completed=False)
        with pytest.raises(RuntimeError):
            detect_dependencies_dynamic(plan, tampered)
        tampered[victim] = SpawnRecord(rec.task, rec.task.id, parent_completed=True)
        with pytest.raises(RuntimeError):
            detect_dependencies_dynamic(plan, tampered)


class TestExportDot:
    def test_empty_graph(self):
        dot = export_dot(TaskGraph([], ()))
        assert dot.startswith("digraph")
        assert "->" not in dot
        assert "label" not in dot

    def test_vector_example_counts(self):
        g = detect_dependencies(vector_example())
        dot = export_dot(g)
        assert dot.count("label=") == 6
        assert dot.count("->") == 6

    def test_node_count_matches_any_stream(self):
        g = GridSpec((4, 4))
        graph = detect_dependencies(generate_loopex(g))
        assert export_dot(graph).count("label=") == graph.task_count

    def test_stable_output(self):
        g = detect_dependencies(vector_example())
        assert export_dot(g) == export_dot(g)

    def test_transitive_reduction_drops_implied_edge(self):
        tasks = [
            make_task(0, writes={"a", "b"}),
            make_task(1, writes={"a"}),
            make_task(2, reads={"b"}, writes={"a"}),
        ]
        g = detect_dependencies(tasks)
        assert (0, 2) in g.edges  # justified by b
        reduced = export_dot(g, transitive_reduction=True)
        assert "t0 -> t2" not in reduced
        assert "t0 -> t1" in reduced and "t1 -> t2" in reduced

    def test_edge_direction_validated(self):
        with pytest.raises(ValueError):
            TaskGraph([make_task(0, writes={"a"}), make_task(1, writes={"a"})], ((1, 0),))
