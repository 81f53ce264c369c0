import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamquery import ContractError, Oracle, ParamSet, StrategyFailure
from hamquery.altstrat import (KInOutDigraph, SubExposure, expand_cycle, plan_two_phase,
                               q2_residual, solve_directed_hamilton, solve_q2,
                               spanning_tree_strategy, two_phase_strategy, V_P)
from hamquery.harness import read_config
from hamquery.verify import _ham_dp, validate_certificate, validate_tree

CFG = Path(__file__).resolve().parents[1] / "configs" / "two_phase_n200.cfg"


@given(st.floats(1e-6, 1.0), st.floats(0.0, 1.0))
def test_q2_solves_coupling(p, frac):
    q1 = frac * p
    q2 = solve_q2(p, q1)
    assert 0.0 <= q2 <= 1.0
    assert q2_residual(p, q1, q2) < 1e-12


def test_q2_rejects_bad_input():
    with pytest.raises(Exception):
        solve_q2(0.3, 0.5)


def test_exposure_budget():
    ex = SubExposure(Oracle(10, 0.5, 0), np.random.default_rng(0), {"q1": 1, "q2": 4})
    ex.expose(0, 1, "q1", 0.1)
    with pytest.raises(ContractError):
        ex.expose(1, 0, "q1", 0.1)
    for _ in range(4):
        ex.expose(0, 1, "q2", 0.05)
    with pytest.raises(ContractError):
        ex.expose(0, 1, "q2", 0.05)
    assert ex.max_use("q2") == 4


def test_exposure_cannot_exceed_p():
    ex = SubExposure(Oracle(10, 0.2, 0), np.random.default_rng(0), {"a": 5})
    ex.expose(2, 3, "a", 0.15)
    with pytest.raises(ContractError):
        ex.expose(2, 3, "a", 0.15)


@pytest.mark.parametrize("p,q1", [(0.5, 0.3), (0.2, 0.05), (0.9, 0.8)])
def test_exposure_marginals(p, q1):
    # first exposure positive w.p. q1; the union of all five w.p. p
    n = 200
    q2 = solve_q2(p, q1)
    o = Oracle(n, p, 1)
    ex = SubExposure(o, np.random.default_rng(2), {"q1": 1, "q2": 4})
    first = union = 0
    m = 0
    for u in range(100):
        for v in range(100, 200):
            hits = [ex.expose(u, v, "q1", q1)] + [ex.expose(u, v, "q2", q2) for _ in range(4)]
            first += hits[0]
            union += any(hits)
            if any(hits):
                assert o.answered_positive(u, v)
            m += 1
    assert abs(first - m * q1) <= 4 * math.sqrt(m * q1 * (1 - q1))
    assert abs(union - m * p) <= 4 * math.sqrt(m * p * (1 - p))
    assert o.stats().total <= m


def test_digraph_arcs():
    d = KInOutDigraph([10, 11, 12], out=[[1], [2], [0]], inn=[[2], [], []])
    assert d.successors() == [{1}, {2}, {0}]


def directed_dp(d: KInOutDigraph) -> bool:
    succ = d.successors()
    adj = np.array([sum(1 << w for w in s) for s in succ], dtype=np.int64)
    return _ham_dp(adj, d.size).size > 0


def check_cycle(d, cyc):
    succ = d.successors()
    assert sorted(cyc) == list(range(d.size))
    assert all(cyc[(i + 1) % len(cyc)] in succ[cyc[i]] for i in range(len(cyc)))


@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 1, 2]), st.booleans())
def test_directed_solver_vs_exhaustive(seed, k, heuristic):
    d = KInOutDigraph.random(20, k, np.random.default_rng(seed))
    truth = directed_dp(d)
    try:
        cyc = solve_directed_hamilton(d, exact_cap=0 if heuristic else 30, seed=seed)
    except StrategyFailure:
        # the exact search is complete; the heuristic may miss
        assert heuristic or not truth
        return
    assert truth
    check_cycle(d, cyc)


@pytest.mark.parametrize("size", [200, 2000])
def test_directed_heuristic_large(size):
    d = KInOutDigraph.random(size, 3, np.random.default_rng(size))
    check_cycle(d, solve_directed_hamilton(d, seed=1))


def test_expand_cycle():
    d = KInOutDigraph([5, 6, V_P], [[], [], []], [[], [], []])
    assert expand_cycle(d, [0, 2, 1], [1, 2, 3]) == [1, 2, 3, 6, 5]


def test_plan():
    plan = plan_two_phase(1000, math.log(1000) ** 2 / 1000, ParamSet(1000))
    assert plan.f == pytest.approx(math.log(1000))
    assert plan.m + plan.t == 1000
    assert q2_residual(math.log(1000) ** 2 / 1000, plan.q1, plan.q2) < 1e-12


def test_two_phase_complete_graph():
    o = Oracle(50, 1.0, 0)
    cert = two_phase_strategy(o, ParamSet(50))
    assert validate_certificate(cert, o).ok
    assert o.stats().positives == 50


@pytest.mark.parametrize("seed", range(5))
def test_two_phase_dense(seed):
    _, knobs = read_config(CFG)
    o = Oracle(200, 0.5, seed)
    cert = two_phase_strategy(o, ParamSet.from_mapping(200, knobs), alg_seed=seed)
    assert validate_certificate(cert, o).ok
    assert sum(cert.positives_by_phase.values()) == o.stats().positives


def test_spanning_tree():
    o = Oracle(300, 1.0, 0)
    edges = spanning_tree_strategy(o)
    assert validate_tree(edges, o).ok and o.stats().positives == 299
    with pytest.raises(StrategyFailure):
        spanning_tree_strategy(Oracle(300, 0.0, 0))
