import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamquery.errors import MatchingInfeasible, ParameterError
from hamquery.graphtools import (SimpleGraph, check_N_properties, diameter, diameter_within,
                                 is_connected, is_k_pseudorandom, kcore, largest_component,
                                 min_degree_core, random_graph, shortest_red_path,
                                 star_matching)

graphs = st.builds(lambda n, p, s: random_graph(n, p, np.random.default_rng(s)),
                   st.integers(1, 25), st.floats(0.0, 0.6), st.integers(0, 2**32 - 1))


def to_nx(g: SimpleGraph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


@given(graphs, st.integers(0, 5))
def test_kcore_matches_networkx(g, d):
    assert kcore(g, d).tolist() == sorted(nx.k_core(to_nx(g), d).nodes)


@given(graphs)
def test_components_and_diameter(g):
    h = to_nx(g)
    comps = sorted(nx.connected_components(h), key=lambda c: (-len(c), min(c)))
    assert set(largest_component(g).tolist()) == comps[0]
    assert is_connected(g) == nx.is_connected(h)
    big = np.array(sorted(comps[0]))
    want = nx.diameter(h.subgraph(comps[0]))
    assert diameter(g, big) == want
    assert diameter_within(g, big, want)
    assert not diameter_within(g, big, want - 1)
    if len(comps) > 1:
        assert diameter(g) == float("inf")


@given(graphs, st.integers(0, 24), st.integers(0, 24))
def test_shortest_path(g, u, v):
    u, v = u % g.n, v % g.n
    path = shortest_red_path(g, None, u, v)
    h = to_nx(g)
    if not nx.has_path(h, u, v):
        assert path is None
        return
    assert len(path) - 1 == nx.shortest_path_length(h, u, v)
    assert all(g.has_edge(a, b) for a, b in zip(path, path[1:]))


def test_min_degree_core_is_connected():
    # two disjoint K5's and a K6: the 4-core is all three, the largest piece is K6
    edges = [e for base, size in ((0, 5), (5, 5), (10, 6))
             for e in itertools.combinations(range(base, base + size), 2)]
    g = SimpleGraph.from_edges(16, edges)
    assert kcore(g, 4).size == 16
    assert min_degree_core(g, 4).tolist() == list(range(10, 16))


def hall_ok(nbrs, k):
    left = list(nbrs)
    for r in range(1, len(left) + 1):
        for sub in itertools.combinations(left, r):
            if len(set().union(*(nbrs[a] for a in sub))) < k * r:
                return False
    return True


@given(st.dictionaries(st.integers(0, 5), st.sets(st.integers(10, 21), max_size=8),
                       min_size=1, max_size=4),
       st.integers(1, 3))
def test_star_matching_vs_hall(nbrs, k):
    if hall_ok(nbrs, k):
        out = star_matching(nbrs, k)
        used = [b for picks in out.values() for b in picks]
        assert len(used) == len(set(used)) == k * len(nbrs)
        assert all(set(out[a]) <= nbrs[a] for a in nbrs)
    else:
        with pytest.raises(MatchingInfeasible):
            star_matching(nbrs, k)


def test_edge_list_roundtrip(tmp_path):
    g = random_graph(30, 0.2, np.random.default_rng(1))
    path = tmp_path / "g.txt"
    g.write(path)
    assert SimpleGraph.read(path).edges() == g.edges()
    path.write_text("4 2\n# comment\n0 1\n\n2 3\n")
    assert SimpleGraph.read(path).edges() == [(0, 1), (2, 3)]
    path.write_text("4 3\n0 1\n")
    with pytest.raises(ParameterError):
        SimpleGraph.read(path)


def brute_pseudorandom(g, k):
    adj = g.adj_sets()
    for A in itertools.combinations(range(g.n), k):
        rest = [v for v in range(g.n) if v not in A]
        for B in itertools.combinations(rest, k):
            if not any(b in adj[a] for a in A for b in B):
                return False
    return True


@given(st.integers(4, 9), st.floats(0.2, 0.9), st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_pseudorandom_exact_vs_brute(n, p, seed, k):
    g = random_graph(n, p, np.random.default_rng(seed))
    res = is_k_pseudorandom(g, k)
    assert res.holds == brute_pseudorandom(g, k)
    if not res.holds:
        A, B = res.witness
        assert not set(A) & set(B)
        assert not any(g.has_edge(a, b) for a in A for b in B)
    if not is_k_pseudorandom(g, k, mode="sampled", trials=50,
                             rng=np.random.default_rng(seed)).holds:
        assert not res.holds


def test_n_events_on_handcrafted_graphs():
    bowtie = SimpleGraph.from_edges(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)])
    rep = check_N_properties(bowtie, max_degree=4, cycle_len=3, fully_exposed=range(5),
                             which=("N1", "N2", "N3"))
    assert rep.results == {"N1": True, "N2": True, "N3": False}
    assert rep.witnesses["N3"]["vertex"] == 2

    c6 = SimpleGraph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])
    assert check_N_properties(c6, max_degree=2, cycle_len=6).ok

    path = SimpleGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    rep = check_N_properties(path, max_degree=1, cycle_len=4, fully_exposed=[0, 1])
    assert rep.results["N1"] is False and rep.results["N2"] is False
    assert rep.witnesses["N2"] == {"vertex": 0, "degree": 1}

    # K4 has more than three short trails between any two vertices
    k4 = SimpleGraph.from_edges(4, list(itertools.combinations(range(4), 2)))
    rep = check_N_properties(k4, max_degree=3, cycle_len=2, which=("N4",))
    assert rep.results == {"N4": False}
