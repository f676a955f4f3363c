"""Task-stream generation for the four update strategies.

Every cell-cell interaction is one task. A task's `resources` are the
memory proxies it updates (inout); the optional `reads` set holds
read-only inputs (only the buffered strategy's reduce tasks use it).
Creation order is what the dependency detector consumes, so each
generator documents its loop nest precisely.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

from .grid import (
    CellId,
    FIGURE_HALF_STENCIL_2D,
    GridSpec,
    Offset,
    Stencil,
    canonical_half_stencil,
    cells_by_color,
    neighbor,
    zero_offset,
)

ResourceId = tuple

INTRA = "intra"
INTER = "inter"
REDUCE = "reduce"


def accumulator(cell: CellId) -> ResourceId:
    """The per-cell net-result accumulator (stands in for the cell's
    particle arrays)."""
    return ("acc", cell)


def out_buffer(cell: CellId, entry: int) -> ResourceId:
    """Private buffer the home cell writes for stencil entry `entry`."""
    return ("buf", cell, "out", entry)


def in_buffer(cell: CellId, entry: int) -> ResourceId:
    """Private buffer a neighbor writes into `cell` for stencil entry `entry`."""
    return ("buf", cell, "in", entry)


@dataclass(frozen=True)
class Task:
    """One unit of work: an intra-cell, inter-cell, or reduce step.

    ids are dense and strictly increasing in creation (or spawn) order.
    """

    id: int
    kind: str
    home: CellId | None
    offset: Offset | None
    resources: frozenset
    reads: frozenset = frozenset()

    def touched(self) -> frozenset:
        return self.resources | self.reads


@dataclass(frozen=True)
class StencilOrder:
    """A permutation of the n stencil entries: per-cell task creation order.

    Entries are offsets; the all-zero offset is the intra-cell interaction.
    The entries must form a valid stencil (half-stencil + zero), but any
    valid half-stencil is accepted, not just the canonical one.
    """

    offsets: tuple[Offset, ...]

    def __post_init__(self) -> None:
        offsets = tuple(tuple(o) for o in self.offsets)
        object.__setattr__(self, "offsets", offsets)
        Stencil(offsets)  # validates permutation of a legal stencil

    @property
    def dim(self) -> int:
        return len(self.offsets[0])

    @property
    def n(self) -> int:
        return len(self.offsets)

    @classmethod
    def canonical(cls, dim: int) -> "StencilOrder":
        """Intra first, then the canonical half-stencil in sorted order."""
        return cls(canonical_half_stencil(dim).offsets)


def _plus_x(dim: int) -> Offset:
    return (1,) + (0,) * (dim - 1)


def naive_order() -> StencilOrder:
    """Geometrically appealing 2D order: intra, then counterclockwise from
    below. Displacement 4."""
    return StencilOrder(((0, 0), (0, -1), (1, -1), (1, 0), (1, 1)))


def bad_order() -> StencilOrder:
    """Worst-case 2D order with the +x neighbor last. Displacement 5."""
    return StencilOrder(((0, 0), (0, -1), (1, -1), (1, 1), (1, 0)))


def opt_order() -> StencilOrder:
    """Optimal 2D order with the +x neighbor first. Displacement 1."""
    return StencilOrder(((1, 0), (1, -1), (1, 1), (0, -1), (0, 0)))


ORDER_PRESETS = {
    "naive": naive_order,
    "bad": bad_order,
    "opt": opt_order,
}


def _secondary_rank(offset: Offset):
    # Consecutive cells also serialize through the accumulator reached by
    # offsets o and o - x_hat (e.g. (1,1) then (0,1)), and end-of-row cells
    # feed the next row through their y=+1 offsets. Evaluating x=1 entries
    # first keeps the former chains slack; putting y=+1 (and in 3D z=0
    # before z=+1 before z=-1) early keeps the wrap couplings short.
    z_rank = {0: 0, 1: 1, -1: 2}
    return (-offset[0], -offset[1], *(z_rank[c] for c in offset[2:]))


def order_with_displacement(dim: int, delta: int) -> StencilOrder:
    """Canonical-stencil order whose displacement is exactly `delta`, with
    the +x chain as the only binding serialization, so the critical path
    tracks n + delta*(k-1).

    delta=1 puts +x first and intra last; delta in [2, n] keeps intra
    first and slots +x at position delta."""
    stencil = canonical_half_stencil(dim)
    if not 1 <= delta <= stencil.n:
        raise ValueError(f"delta must be in [1, {stencil.n}], got {delta}")
    px = _plus_x(dim)
    rest = sorted((o for o in stencil.inter_offsets if o != px), key=_secondary_rank)
    if delta == 1:
        entries = [px, *rest, zero_offset(dim)]
    else:
        entries = [zero_offset(dim), *rest]
        entries.insert(delta - 1, px)
    return StencilOrder(tuple(entries))


def intra_first_orders(dim: int = 2):
    """All (n-1)! orders that fix intra first and permute the canonical
    inter entries; 4! = 24 of them in 2D."""
    stencil = canonical_half_stencil(dim)
    zero = zero_offset(dim)
    for perm in itertools.permutations(stencil.inter_offsets):
        yield StencilOrder((zero, *perm))


def displacement(order: StencilOrder) -> int:
    """1-based position of the pure +x entry: the number of interactions
    evaluated per cell before the one shared with the next x-neighbor."""
    px = _plus_x(order.dim)
    try:
        return order.offsets.index(px) + 1
    except ValueError:
        raise ValueError(f"order {order.offsets} lacks the +x entry {px}") from None


def _inter_resources(cell: CellId, nbr: CellId) -> frozenset:
    # frozenset collapses the self-neighbor case to a single accumulator
    return frozenset((accumulator(cell), accumulator(nbr)))


def generate_basic(grid: GridSpec, order: StencilOrder) -> list[Task]:
    """Literature loop nest: outer loop over cells (x-fastest), inner loop
    over the stencil entries in `order`. Truncated inter tasks on
    non-periodic boundaries are dropped."""
    if order.dim != grid.dim:
        raise ValueError(f"order is {order.dim}D but grid is {grid.dim}D")
    zero = zero_offset(grid.dim)
    tasks: list[Task] = []
    for cell in grid.cells():
        for off in order.offsets:
            if off == zero:
                tasks.append(
                    Task(len(tasks), INTRA, cell, None, frozenset((accumulator(cell),)))
                )
            else:
                nbr = neighbor(cell, off, grid)
                if nbr is None:
                    continue
                tasks.append(Task(len(tasks), INTER, cell, off, _inter_resources(cell, nbr)))
    return tasks


def generate_loopex(grid: GridSpec) -> list[Task]:
    """Loop-exchanged sweep: outer loop over the canonical stencil entries
    (intra first), then over the 2**dim colors ascending, then over the
    cells of that color x-fastest.

    Within one (offset, color) block all tasks touch pairwise-disjoint
    resources when every periodic extent is even; odd extents break the
    2-stride and reintroduce dependencies (warned)."""
    if grid.periodic and any(e % 2 for e in grid.extents):
        warnings.warn(
            f"loop-exchange coloring needs even periodic extents, got {grid.extents}: "
            "same-color blocks will not be dependency-free",
            stacklevel=2,
        )
    stencil = canonical_half_stencil(grid.dim)
    zero = zero_offset(grid.dim)
    groups = cells_by_color(grid)
    tasks: list[Task] = []
    for off in stencil.offsets:
        for cells in groups:
            for cell in cells:
                if off == zero:
                    tasks.append(
                        Task(len(tasks), INTRA, cell, None, frozenset((accumulator(cell),)))
                    )
                else:
                    nbr = neighbor(cell, off, grid)
                    if nbr is None:
                        continue
                    tasks.append(
                        Task(len(tasks), INTER, cell, off, _inter_resources(cell, nbr))
                    )
    return tasks


def generate_buffered(grid: GridSpec) -> list[Task]:
    """Compute-into-private-buffers, then one flat reduce per cell.

    Compute tasks write only buffers (home outgoing slot; inter tasks also
    the neighbor's incoming slot for the same stencil entry), so they share
    no resources at all. Each reduce task updates its cell's accumulator
    and reads every buffer slot that was actually written."""
    stencil = canonical_half_stencil(grid.dim)
    zero = zero_offset(grid.dim)
    written: dict[CellId, list[ResourceId]] = {cell: [] for cell in grid.cells()}
    tasks: list[Task] = []
    for cell in grid.cells():
        for entry, off in enumerate(stencil.offsets):
            if off == zero:
                slot = out_buffer(cell, entry)
                written[cell].append(slot)
                tasks.append(Task(len(tasks), INTRA, cell, None, frozenset((slot,))))
            else:
                nbr = neighbor(cell, off, grid)
                if nbr is None:
                    continue
                home_slot = out_buffer(cell, entry)
                nbr_slot = in_buffer(nbr, entry)
                written[cell].append(home_slot)
                written[nbr].append(nbr_slot)
                tasks.append(
                    Task(len(tasks), INTER, cell, off, frozenset((home_slot, nbr_slot)))
                )
    for cell in grid.cells():
        tasks.append(
            Task(
                len(tasks),
                REDUCE,
                cell,
                None,
                frozenset((accumulator(cell),)),
                reads=frozenset(written[cell]),
            )
        )
    return tasks


@dataclass(frozen=True)
class NestedPlan:
    """Dynamic spawning plan: all intra tasks up front, then each completed
    task in a cell's chain spawns the next stencil entry for that cell.

    The chain order defaults to the canonical stencil with intra first; the
    consumer (simulator or executor) drives spawning and must serialize
    spawn events."""

    grid: GridSpec
    order: StencilOrder | None = None

    def __post_init__(self) -> None:
        if self.order is None:
            object.__setattr__(self, "order", StencilOrder.canonical(self.grid.dim))
        if self.order.dim != self.grid.dim:
            raise ValueError(f"order is {self.order.dim}D but grid is {self.grid.dim}D")
        if self.order.offsets[0] != zero_offset(self.grid.dim):
            raise ValueError("nested chains must start with the intra entry")

    def initial_tasks(self) -> list[Task]:
        """One intra task per cell, x-fastest, ids 0..cell_count-1."""
        return [
            Task(cell, INTRA, cell, None, frozenset((accumulator(cell),)))
            for cell in self.grid.cells()
        ]

    def chain_position(self, task: Task) -> int:
        """0-based index of the task's stencil entry within the chain order."""
        off = task.offset if task.offset is not None else zero_offset(self.grid.dim)
        return self.order.offsets.index(off)

    def successor(self, task: Task, next_id: int) -> Task | None:
        """Task spawned by `task`'s completion, or None at the chain's end.

        Entries whose neighbor falls off a non-periodic boundary are
        skipped, keeping the chain connected."""
        if task.home is None:
            raise ValueError("nested tasks must carry a home cell")
        pos = self.chain_position(task)
        for entry in range(pos + 1, self.order.n):
            off = self.order.offsets[entry]
            nbr = neighbor(task.home, off, self.grid)
            if nbr is None:
                continue
            return Task(next_id, INTER, task.home, off, _inter_resources(task.home, nbr))
        return None


def nested_plan(grid: GridSpec, order: StencilOrder | None = None) -> NestedPlan:
    return NestedPlan(grid, order)


STRATEGIES = ("basic", "loopex", "buffered", "nested")


def generate(strategy: str, grid: GridSpec, order: StencilOrder | None = None):
    """Dispatch helper: task list for static strategies, NestedPlan for
    `nested`."""
    if strategy == "basic":
        return generate_basic(grid, order if order is not None else StencilOrder.canonical(grid.dim))
    if strategy == "loopex":
        return generate_loopex(grid)
    if strategy == "buffered":
        return generate_buffered(grid)
    if strategy == "nested":
        return nested_plan(grid, order)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
