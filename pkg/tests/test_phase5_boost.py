import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from hamquery import ColorState, EdgeColor, Oracle, ParamSet
from hamquery.errors import ContractError
from hamquery.graphtools import SimpleGraph, is_connected, random_graph
from hamquery.phase5_boost import (booster_loop, connect_components, enumerate_boosters,
                                   exact_longest_through, materialize, open_cycle_at_e,
                                   top_up_degrees)
from hamquery.verify import brute_force_boosters, longest_path_through


@st.composite
def graph_and_pair(draw, lo=6, hi=12):
    n = draw(st.integers(lo, hi))
    g = random_graph(n, draw(st.floats(0.15, 0.6)),
                     np.random.default_rng(draw(st.integers(0, 2**32 - 1))))
    x, y = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
    assume(not g.has_edge(x, y))
    return g, (x, y)


@given(graph_and_pair(), st.booleans())
def test_boosters_sound(gp, rotations_only):
    g, e = gp
    assume(is_connected(g))
    try:
        brute = brute_force_boosters(g, e)
    except ContractError:
        return
    got = enumerate_boosters(g, e, exact_cap=0 if rotations_only else 12)
    assert got <= brute


@given(graph_and_pair(4, 11))
def test_exact_longest_through(gp):
    g, e = gp
    adj = [sorted(g.neighbors(v).tolist()) for v in range(g.n)]
    path, hc = exact_longest_through(adj, e)
    assert len(path) == longest_path_through(g, e)
    assert len(set(path)) == len(path)
    i = path.index(e[0])
    assert e[1] in (path[i - 1] if i else None, path[i + 1] if i + 1 < len(path) else None)
    for a, b in zip(path, path[1:]):
        assert g.has_edge(a, b) or {a, b} == set(e)


def test_open_cycle():
    cyc = [4, 2, 7, 1, 9]
    assert open_cycle_at_e(cyc, (7, 1)) == [7, 2, 4, 9, 1]
    assert open_cycle_at_e(cyc, (1, 7)) == [1, 9, 4, 2, 7]
    with pytest.raises(ContractError):
        open_cycle_at_e(cyc, (4, 7))


def test_materialize_tail_rotations():
    p = list(range(8))
    # rotating at pivot 2 reverses everything after position 2
    assert materialize(p, (2,)) == [0, 1, 2, 7, 6, 5, 4, 3]
    assert materialize(p, (2, 5)) == [0, 1, 2, 7, 6, 5, 3, 4]


def test_topup_and_connect():
    n = 60
    s = ColorState(Oracle(n, 0.2, 5), 5)
    prm = ParamSet(n, boost_min_degree=3, connect_mode="giant")
    verts = np.arange(n)
    assert top_up_degrees(s, verts, prm) > 0
    assert all(s.red_degree(v) >= 3 for v in range(n))
    connect_components(s, verts, prm)
    assert is_connected(SimpleGraph.from_csr(s.red_csr()))


@pytest.mark.parametrize("seed", range(10))
def test_booster_loop_finds_hamilton_path(seed):
    n = 40
    s = ColorState(Oracle(n, 0.3, seed), seed)
    prm = ParamSet(n, boost_min_degree=3)
    verts = np.arange(n)
    top_up_degrees(s, verts, prm)
    connect_components(s, verts, prm)
    path = booster_loop(s, verts.tolist(), (0, 1), prm)
    assert sorted(path) == list(range(n)) and (path[0], path[-1]) == (0, 1)
    assert all(s.color(a, b) == EdgeColor.RED for a, b in zip(path, path[1:]))
