"""Deterministic integer interaction payload.

Every strategy must produce bit-identical per-cell accumulations no matter
how tasks are ordered, colored, nested, or buffered. Exact integers make
that testable: addition commutes, so any schedule that applies each
contribution exactly once matches the oracle exactly.

The pair contribution is antisymmetric by construction, g(a,b,o) =
-g(b,a,-o), mirroring the write-to-both-cells bookkeeping of a
force calculation under Newton's third law.
"""

from __future__ import annotations

import itertools

from .depgraph import detect_dependencies
from .grid import GridSpec, Offset, negate, neighbor, zero_offset
from .schedsim import SimConfig, SimResult, simulate, simulate_dynamic, unlimited_workers
from .taskgen import (
    INTER,
    INTRA,
    REDUCE,
    NestedPlan,
    StencilOrder,
    Task,
    generate,
)

_MASK64 = (1 << 64) - 1
_CHARGE_KEY = 0x9E3779B97F4A7C15
_PAIR_KEY = 0xA0761D6478BD642F
_INTRA_KEY = 0x2545F4914F6CDD1D


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _center32(x: int) -> int:
    return (x & 0xFFFFFFFF) - (1 << 31)


def _u64(x: int) -> int:
    return x & _MASK64


def _offset_code(offset: Offset) -> int:
    code = 0
    for c in reversed(offset):
        code = code * 3 + (c + 1)
    return code


def charges(grid: GridSpec, seed: int) -> list[int]:
    """Per-cell charge, reproducible across platforms."""
    base = _splitmix64(_u64(seed) ^ _CHARGE_KEY)
    return [_center32(_splitmix64(base + cell)) for cell in grid.cells()]


def intra_contribution(charge: int) -> int:
    """Contribution a cell adds to its own accumulator, once per sweep."""
    return _center32(_splitmix64(_INTRA_KEY ^ _u64(charge)))


def _mix_pair(charge_a: int, charge_b: int, offset: Offset) -> int:
    h = _splitmix64(_PAIR_KEY ^ _u64(charge_a))
    h = _splitmix64(h ^ _u64(charge_b))
    h = _splitmix64(h ^ _offset_code(offset))
    return h & 0x7FFFFFFF


def pair_contribution(charge_a: int, charge_b: int, offset: Offset) -> tuple[int, int]:
    """(to_a, to_b) for the interaction of cell a with the neighbor at
    `offset`. to_b = -to_a, and swapping the pair while negating the offset
    flips both signs exactly."""
    g = _mix_pair(charge_a, charge_b, offset) - _mix_pair(charge_b, charge_a, negate(offset))
    return g, -g


def apply_tasks(tasks, grid: GridSpec, seed: int) -> dict[int, int]:
    """Apply a task sequence's contributions and return cell -> accumulator.

    Works for accumulator-writing streams and for the buffered stream,
    whose compute tasks fill private slots that the reduce tasks then sum.
    The result is independent of the order tasks are applied in, provided
    each task appears exactly once.
    """
    q = charges(grid, seed)
    acc = {cell: 0 for cell in grid.cells()}
    buffers: dict = {}
    for task in tasks:
        if task.kind == INTRA:
            value = intra_contribution(q[task.home])
            res = next(iter(task.resources))
            if res[0] == "acc":
                acc[task.home] += value
            else:
                buffers[res] = buffers.get(res, 0) + value
        elif task.kind == INTER:
            nbr = neighbor(task.home, task.offset, grid)
            to_home, to_nbr = pair_contribution(q[task.home], q[nbr], task.offset)
            buffered = any(r[0] == "buf" for r in task.resources)
            if buffered:
                for res in task.resources:
                    _, cell, direction, _ = res
                    value = to_home if direction == "out" else to_nbr
                    buffers[res] = buffers.get(res, 0) + value
            else:
                acc[task.home] += to_home
                acc[nbr] += to_nbr
        elif task.kind == REDUCE:
            acc[task.home] += sum(buffers.get(slot, 0) for slot in task.reads)
        else:
            raise ValueError(f"task {task.id} has non-payload kind {task.kind!r}")
    return acc


def execute_with_payload(
    strategy: str,
    grid: GridSpec,
    seed: int,
    order: StencilOrder | None = None,
    workers: int | None = None,
) -> dict[int, int]:
    """Run a strategy's task stream and return the final accumulators.

    With `workers` set, tasks are applied in the simulated schedule order
    for that worker count instead of creation order; the nested strategy
    always goes through the dynamic simulator to realize its spawn order.
    """
    stream = generate(strategy, grid, order)
    if isinstance(stream, NestedPlan):
        cfg = SimConfig(workers) if workers else unlimited_workers(stream)
        result = simulate_dynamic(stream, cfg)
        ordered = [result.graph.tasks[tid] for tid in result.execution_order()]
        return apply_tasks(ordered, grid, seed)
    if workers:
        result = simulate(detect_dependencies(stream), SimConfig(workers))
        stream = [stream[tid] for tid in result.execution_order()]
    return apply_tasks(stream, grid, seed)


def replay_schedule(tasks: list[Task], result: SimResult, grid: GridSpec, seed: int) -> dict[int, int]:
    """Apply an already-simulated schedule's tasks in execution order."""
    return apply_tasks([tasks[tid] for tid in result.execution_order()], grid, seed)


def reference_oracle(grid: GridSpec, seed: int) -> dict[int, int]:
    """Accumulators computed without any task machinery.

    Each cell sums its intra term plus the directed contribution from every
    one of its 3**dim - 1 neighbors. Under the antisymmetry of
    pair_contribution this equals any half-stencil task sweep, for every
    wrap-around corner case, and it has no notion of stencil, order, or
    strategy to get wrong.
    """
    q = charges(grid, seed)
    zero = zero_offset(grid.dim)
    acc = {}
    for cell in grid.cells():
        total = intra_contribution(q[cell])
        for off in itertools.product((-1, 0, 1), repeat=grid.dim):
            if off == zero:
                continue
            nbr = neighbor(cell, off, grid)
            if nbr is None:
                continue
            total += pair_contribution(q[cell], q[nbr], off)[0]
        acc[cell] = total
    return acc


def conservation_defect(acc: dict[int, int], grid: GridSpec, seed: int) -> int:
    """Sum of accumulators minus sum of intra terms; zero when all inter
    contributions cancel pairwise."""
    q = charges(grid, seed)
    return sum(acc.values()) - sum(intra_contribution(q[c]) for c in grid.cells())
