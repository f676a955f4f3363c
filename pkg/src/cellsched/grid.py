"""Cell-domain geometry: periodic grids, half-stencils, and 2-strided coloring.

Cells are addressed by a linear index that runs x-fastest, then y, then z,
so index = x + ex*(y + ey*z). Offsets are per-axis tuples with components
in {-1, 0, +1}; the all-zero offset denotes the intra-cell interaction.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

CellId = int
Offset = tuple[int, ...]


def zero_offset(dim: int) -> Offset:
    return (0,) * dim


def negate(offset: Offset) -> Offset:
    return tuple(-c for c in offset)


def is_lex_positive(offset: Offset) -> bool:
    """True if the first nonzero component (x most significant) is positive."""
    for c in offset:
        if c > 0:
            return True
        if c < 0:
            return False
    return False


def _validate_offset(offset: Offset, dim: int) -> None:
    if len(offset) != dim:
        raise ValueError(f"offset {offset} has {len(offset)} components, expected {dim}")
    if any(c not in (-1, 0, 1) for c in offset):
        raise ValueError(f"offset components must be in {{-1, 0, 1}}, got {offset}")


@dataclass(frozen=True)
class GridSpec:
    """A 2D or 3D box of unit cells, periodic by default.

    Extents are per-axis cell counts. Periodic grids with any extent below 3
    let a cell neighbor itself (or reach the same neighbor through two
    offsets), which silently changes dependency structure; construction
    warns but allows it.
    """

    extents: tuple[int, ...]
    periodic: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))
        if self.dim not in (2, 3):
            raise ValueError(f"grid must be 2D or 3D, got {self.dim} extents")
        if any(e < 1 for e in self.extents):
            raise ValueError(f"extents must be >= 1, got {self.extents}")
        if self.periodic and min(self.extents) < 3:
            warnings.warn(
                f"periodic grid with extent < 3 ({self.extents}): neighbor cells "
                "can coincide with the home cell; tasks deduplicate resources",
                stacklevel=2,
            )

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def cell_count(self) -> int:
        n = 1
        for e in self.extents:
            n *= e
        return n

    def cells(self) -> range:
        """All cell ids in x-fastest creation order."""
        return range(self.cell_count)

    def coords(self, cell: CellId) -> tuple[int, ...]:
        if not 0 <= cell < self.cell_count:
            raise ValueError(f"cell {cell} out of range for {self.extents}")
        out = []
        for e in self.extents:
            out.append(cell % e)
            cell //= e
        return tuple(out)

    def index(self, coords: tuple[int, ...]) -> CellId:
        if len(coords) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {coords}")
        idx = 0
        for c, e in zip(reversed(coords), reversed(self.extents)):
            if not 0 <= c < e:
                raise ValueError(f"coordinate {coords} outside extents {self.extents}")
            idx = idx * e + c
        return idx


def neighbor(cell: CellId, offset: Offset, grid: GridSpec) -> CellId | None:
    """Cell reached from `cell` by `offset`; None when it falls off a
    non-periodic boundary."""
    _validate_offset(offset, grid.dim)
    coords = grid.coords(cell)
    shifted = []
    for c, o, e in zip(coords, offset, grid.extents):
        s = c + o
        if grid.periodic:
            s %= e
        elif not 0 <= s < e:
            return None
        shifted.append(s)
    return grid.index(tuple(shifted))


ColorId = int


def color(cell: CellId, grid: GridSpec) -> ColorId:
    """2-strided color: bit k is (coordinate k mod 2); 2**dim colors total.

    Executing one stencil offset over all cells of one color touches
    pairwise-disjoint resource pairs, provided every periodic extent is even.
    """
    coords = grid.coords(cell)
    c = 0
    for axis, v in enumerate(coords):
        c |= (v & 1) << axis
    return c


def cells_by_color(grid: GridSpec) -> list[list[CellId]]:
    """Cell ids grouped by color, each group in x-fastest order."""
    groups: list[list[CellId]] = [[] for _ in range(2**grid.dim)]
    for cell in grid.cells():
        groups[color(cell, grid)].append(cell)
    return groups


@dataclass(frozen=True)
class Stencil:
    """One all-zero offset plus a half-stencil of inter-cell offsets.

    The half-stencil covers each unordered cell pair once: for no nonzero
    offset are both o and -o present, and half-stencil + negation + zero
    cover the whole 3**dim neighborhood. 2D has n=5 entries, 3D n=14.
    """

    offsets: tuple[Offset, ...]

    def __post_init__(self) -> None:
        offsets = tuple(tuple(o) for o in self.offsets)
        object.__setattr__(self, "offsets", offsets)
        if not offsets:
            raise ValueError("stencil needs at least the zero offset")
        dim = len(offsets[0])
        for o in offsets:
            _validate_offset(o, dim)
        zero = zero_offset(dim)
        if sum(1 for o in offsets if o == zero) != 1:
            raise ValueError("stencil must contain exactly one all-zero offset")
        inter = [o for o in offsets if o != zero]
        if len(set(inter)) != len(inter):
            raise ValueError("duplicate offsets in stencil")
        for o in inter:
            if negate(o) in inter:
                raise ValueError(f"both {o} and {negate(o)} present; not a half-stencil")
        covered = set(inter) | {negate(o) for o in inter} | {zero}
        full = set(itertools.product((-1, 0, 1), repeat=dim))
        if covered != full:
            raise ValueError("half-stencil does not cover the full neighborhood")

    @property
    def dim(self) -> int:
        return len(self.offsets[0])

    @property
    def n(self) -> int:
        """Tasks per cell: 1 intra + the inter offsets."""
        return len(self.offsets)

    @property
    def inter_offsets(self) -> tuple[Offset, ...]:
        zero = zero_offset(self.dim)
        return tuple(o for o in self.offsets if o != zero)


def canonical_half_stencil(dim: int) -> Stencil:
    """Zero offset first, then the lexicographically positive half of the
    neighborhood in sorted order. n=5 for 2D, n=14 for 3D."""
    if dim not in (2, 3):
        raise ValueError(f"unsupported dim {dim}; expected 2 or 3")
    inter = sorted(
        o for o in itertools.product((-1, 0, 1), repeat=dim) if is_lex_positive(o)
    )
    return Stencil((zero_offset(dim), *inter))


# Mirror of the canonical 2D half-stencil: the set usually drawn in link-cell
# sketches ((0,-1) below instead of (0,+1) above). Same DAG structure by symmetry.
FIGURE_HALF_STENCIL_2D = ((0, -1), (1, -1), (1, 0), (1, 1))
