import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamquery import ColorState, EdgeColor, Oracle, ParamSet, PhaseFailure
from hamquery.phase1_dfs import close_cycle, randomized_dfs, run_phase1

from test_oracle import naive_dfs


@given(n=st.integers(4, 70), seed=st.integers(0, 2**31), p=st.floats(0.02, 1.0),
       q=st.floats(0.1, 1.0))
def test_dfs_sets(n, seed, p, q):
    s = ColorState(Oracle(n, p, seed), alg_seed=seed)
    d = randomized_dfs(s, ParamSet(n).with_updates(q=q))
    parts = np.concatenate([d.C, d.A, d.U])
    assert sorted(parts.tolist()) == list(range(n))
    assert d.C.shape[0] == d.U.shape[0] or d.A.shape[0] == 0
    for a, b in d.path_edges():
        assert s.color(a, b) == EdgeColor.RED
    # a finished vertex has no red pair into the unvisited part
    for c in d.C.tolist():
        assert not any(s.color(c, u) == EdgeColor.RED for u in d.U.tolist())
    assert s.n_red == n - int((d.parent < 0).sum())


@given(n=st.integers(4, 40), seed=st.integers(0, 2**31), p=st.floats(0.05, 1.0),
       q=st.floats(0.2, 1.0))
def test_dfs_matches_reference(n, seed, p, q):
    s = ColorState(Oracle(n, p, seed), alg_seed=seed)
    fkey = s.new_key()
    d = randomized_dfs(ColorState(Oracle(n, p, seed), alg_seed=seed), ParamSet(n).with_updates(q=q))
    ref = Oracle(n, p, seed)
    stack, completed = naive_dfs(ref, fkey, q)
    assert d.A.tolist() == stack
    assert d.C.tolist() == sorted(completed)


def test_close_cycle_complete_graph():
    n = 40
    s = ColorState(Oracle(n, 1.0, 0))
    prm = ParamSet(n).with_updates(q=1.0, k_interval=5)
    path = list(range(n))
    out = close_cycle(s, path, prm)
    # first pair scanned is (path[0], path[n-15]) and it is red
    assert out.cycle == path[:n - 14]
    assert sorted(out.U.tolist()) == path[n - 14:]


def test_phase1_cycle_is_red():
    n = 2000
    prm = ParamSet(n, k_factor=0.5, k_exp=1.0)
    s = ColorState(Oracle(n, 10 * np.log(n) / n, 4), 4)
    dfs, out = run_phase1(s, prm)
    cyc = out.cycle
    assert len(set(cyc)) == len(cyc) >= n - 3 * prm.k_interval
    assert all(s.color(a, b) == EdgeColor.RED for a, b in zip(cyc, cyc[1:] + cyc[:1]))
    assert dfs.C.shape[0] <= prm.k_interval


def test_phase1_fails_without_edges():
    s = ColorState(Oracle(100, 0.0, 1))
    with pytest.raises(PhaseFailure) as ei:
        run_phase1(s, ParamSet(100))
    assert ei.value.phase == 1
