import numpy as np
import pytest
from hypothesis import given, strategies as st

from parabolic_qr.errors import ConfigurationError, DomainError
from parabolic_qr.grid import (
    GridSpec, boundary_index_arrays, boundary_nodes, boundary_sides, delineup, interior_mask,
    inward_neighbors, lineup,
)

grids = st.builds(GridSpec, R=st.floats(0.1, 5.0), nx=st.integers(2, 12), nt=st.integers(1, 9),
                  T=st.floats(0.01, 2.0))


def test_defaults_and_steps():
    g = GridSpec()
    assert (g.R, g.nx, g.nt, g.T) == (1.0, 100, 60, 0.2)
    assert g.dx == pytest.approx(0.02)
    assert g.dt == pytest.approx(0.2 / 60)
    assert g.x[0] == -1.0 and g.x[-1] == pytest.approx(1.0)
    assert g.t[0] == 0.0 and g.t[-1] == pytest.approx(0.2)


def test_lineup_formula_small():
    g = GridSpec(1.0, 4, 2, 1.0)
    assert lineup(g, (1, 1, 1)) == 1
    assert lineup(g, (1, 1, 3)) == 3
    assert lineup(g, (1, 2, 1)) == 4
    assert lineup(g, (2, 1, 1)) == 5 * 3 + 1
    assert lineup(g, (5, 5, 3)) == g.size


@given(grids, st.data())
def test_lineup_roundtrip(g, data):
    n = data.draw(st.integers(1, g.size))
    idx = delineup(g, n)
    assert lineup(g, idx) == n


@given(grids)
def test_lineup_is_c_order_ravel(g):
    ords = np.array([[[lineup(g, (i, j, l)) for l in range(1, g.nt + 2)]
                      for j in range(1, g.nx + 2)] for i in range(1, g.nx + 2)])
    assert np.array_equal(ords.ravel(), np.arange(1, g.size + 1))


@pytest.mark.parametrize("idx", [(0, 1, 1), (1, 0, 1), (1, 1, 0), (6, 1, 1), (1, 1, 4)])
def test_lineup_out_of_range(idx):
    with pytest.raises(DomainError):
        lineup(GridSpec(1.0, 4, 2, 1.0), idx)


def test_delineup_out_of_range():
    g = GridSpec(1.0, 4, 2, 1.0)
    for n in (0, g.size + 1):
        with pytest.raises(DomainError):
            delineup(g, n)


@pytest.mark.parametrize("kw", [{"nx": 1}, {"nt": 0}, {"R": 0.0}, {"T": -1.0}, {"nx": 2.5}])
def test_invalid_spec(kw):
    with pytest.raises(ConfigurationError):
        GridSpec(**kw)


@given(grids)
def test_boundary_bookkeeping(g):
    nodes = boundary_nodes(g)
    assert len(nodes) == len(set(nodes)) == 4 * g.nx
    assert sum(interior_mask(g).ravel()) == (g.nx - 1) ** 2
    ii, jj = boundary_index_arrays(g)
    assert not interior_mask(g)[ii, jj].any()
    ni, nj = inward_neighbors(g)
    assert np.all(np.abs(ni - ii) + np.abs(nj - jj) == 1)


def test_corner_sides_prefer_x():
    g = GridSpec(1.0, 3, 1, 1.0)
    sides = dict(zip(boundary_nodes(g), boundary_sides(g)))
    assert sides[(1, 1)] == "x-" and sides[(1, 4)] == "x-"
    assert sides[(4, 1)] == "x+" and sides[(4, 4)] == "x+"
    assert sides[(2, 1)] == "y-" and sides[(3, 4)] == "y+"


def test_refined():
    g = GridSpec(1.0, 10, 6, 0.2).refined(2)
    assert (g.nx, g.nt) == (20, 12)
    with pytest.raises(ConfigurationError):
        GridSpec().refined(0)
