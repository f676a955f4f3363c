import itertools

import pytest

from cellsched.grid import (
    FIGURE_HALF_STENCIL_2D,
    GridSpec,
    Stencil,
    canonical_half_stencil,
    cells_by_color,
    color,
    neighbor,
    negate,
    zero_offset,
)


def test_canonical_2d_offsets():
    s = canonical_half_stencil(2)
    assert s.n == 5
    assert set(s.inter_offsets) == {(0, 1), (1, -1), (1, 0), (1, 1)}
    assert s.offsets[0] == (0, 0)


def test_canonical_3d_size():
    s = canonical_half_stencil(3)
    assert s.n == 14
    assert len(s.inter_offsets) == 13


@pytest.mark.parametrize("dim", [2, 3])
def test_half_stencil_closure(dim):
    s = canonical_half_stencil(dim)
    inter = set(s.inter_offsets)
    assert not inter & {negate(o) for o in inter}
    covered = inter | {negate(o) for o in inter} | {zero_offset(dim)}
    assert covered == set(itertools.product((-1, 0, 1), repeat=dim))
    assert len(covered) == 3**dim


@pytest.mark.parametrize("dim", [0, 1, 4])
def test_unsupported_dim_rejected(dim):
    with pytest.raises(ValueError):
        canonical_half_stencil(dim)


def test_explicit_stencil_accepts_figure_mirror_set():
    s = Stencil(((0, 0), *FIGURE_HALF_STENCIL_2D))
    assert s.n == 5


@pytest.mark.parametrize(
    "offsets",
    [
        ((0, 0), (1, 0), (-1, 0), (0, 1), (1, 1)),  # o and -o both present
        ((0, 0), (1, 0), (0, 1), (1, 1)),  # does not cover (1,-1)/(-1,1)
        ((1, 0), (0, 1), (1, -1), (1, 1)),  # missing the zero offset
        ((0, 0), (0, 0), (1, 0), (0, 1), (1, -1), (1, 1)),  # two zeros
        ((0, 0), (2, 0), (0, 1), (1, -1), (1, 1)),  # bad component
    ],
)
def test_invalid_stencils_rejected(offsets):
    with pytest.raises(ValueError):
        Stencil(offsets)


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec((5,))
    with pytest.raises(ValueError):
        GridSpec((5, 0))
    with pytest.raises(ValueError):
        GridSpec((2, 2, 2, 2))
    g = GridSpec((4, 6))
    assert g.dim == 2 and g.cell_count == 24


def test_small_periodic_extent_warns():
    with pytest.warns(UserWarning):
        GridSpec((2, 5))
    with pytest.warns(UserWarning):
        GridSpec((1, 1))


def test_coords_index_roundtrip():
    for extents in ((4, 5), (3, 3, 3), (5, 1)):
        if min(extents) < 3:
            g = GridSpec(extents, periodic=False)
        else:
            g = GridSpec(extents)
        for cell in g.cells():
            assert g.index(g.coords(cell)) == cell
    g = GridSpec((5, 4))
    assert g.coords(0) == (0, 0)
    assert g.coords(1) == (1, 0)  # x fastest
    assert g.coords(5) == (0, 1)


def test_neighbor_wraps_and_truncates():
    g = GridSpec((5, 5))
    assert neighbor(g.index((4, 2)), (1, 0), g) == g.index((0, 2))
    gn = GridSpec((5, 5), periodic=False)
    assert neighbor(gn.index((4, 2)), (1, 0), gn) is None
    for cell in (0, 7, 24):
        assert neighbor(cell, (0, 0), g) == cell


def test_neighbor_bijection_on_periodic_grids():
    for extents in ((4, 4), (5, 3), (3, 3, 3)):
        g = GridSpec(extents)
        for off in itertools.product((-1, 0, 1), repeat=g.dim):
            image = [neighbor(c, off, g) for c in g.cells()]
            assert sorted(image) == list(g.cells())


def test_color_values_2d():
    g = GridSpec((6, 6))
    assert color(g.index((0, 0)), g) == 0
    assert color(g.index((1, 0)), g) == 1
    assert color(g.index((0, 1)), g) == 2
    assert color(g.index((1, 1)), g) == 3
    assert color(g.index((0, 0)), g) == color(g.index((2, 4)), g)


def test_color_count_3d():
    g = GridSpec((4, 4, 4))
    block = {color(g.index((x, y, z)), g) for x in (0, 1) for y in (0, 1) for z in (0, 1)}
    assert block == set(range(8))
    assert len(cells_by_color(g)) == 8


@pytest.mark.parametrize("extents", [(4, 4), (6, 6), (4, 6), (4, 4, 4)])
def test_same_color_pairs_disjoint_on_even_grids(extents):
    # the basis of the loop-exchange strategy: one (offset, color) block
    # never touches the same accumulator twice
    g = GridSpec(extents)
    stencil = canonical_half_stencil(g.dim)
    for off in stencil.inter_offsets:
        for cells in cells_by_color(g):
            seen = set()
            for c in cells:
                pair = {c, neighbor(c, off, g)}
                for r in pair:
                    assert r not in seen, (extents, off, c)
                seen |= pair


def test_same_color_pairs_collide_on_odd_extent():
    # wrap breaks the 2-stride when an extent is odd: documents why the
    # even-extent restriction above exists
    g = GridSpec((5, 5))
    off = (1, 0)
    collisions = 0
    for cells in cells_by_color(g):
        seen = set()
        for c in cells:
            pair = {c, neighbor(c, off, g)}
            collisions += sum(1 for r in pair if r in seen)
            seen |= pair
    assert collisions > 0
