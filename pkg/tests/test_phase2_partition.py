from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamquery import ColorState, EdgeColor, Oracle, ParamSet, PhaseFailure
from hamquery.harness import read_config, resolve_p
from hamquery.phase1_dfs import run_phase1
from hamquery.phase2_partition import block_decompose, run_phase2

TUNED = Path(__file__).resolve().parents[1] / "configs" / "tuned.cfg"


def tuned(n):
    flags, knobs = read_config(TUNED)
    return ParamSet.from_mapping(n, knobs), resolve_p(n, flags["p-formula"])


@pytest.fixture(scope="module")
def partitioned():
    n = 3000
    prm, p = tuned(n)
    s = ColorState(Oracle(n, p, 2), 2)
    _, p1 = run_phase1(s, prm)
    part = run_phase2(s, p1.cycle, p1.U, prm)
    return s, prm, p1, part


def test_partition_covers_U(partitioned):
    s, prm, p1, part = partitioned
    U = set(part.U.tolist())
    assert U == set(range(s.n)) - set(p1.cycle)
    pieces = [part.EXP1, part.SMALL, part.TINY]
    assert sum(x.shape[0] for x in pieces) == len(U)
    assert set(np.concatenate(pieces).tolist()) == U
    assert set(part.T0.tolist()) <= set(part.T_f.tolist())
    assert set(part.T_f.tolist()) == set(part.SMALL.tolist()) | set(part.TINY.tolist())


def test_absorption_is_closed(partitioned):
    s, prm, _, part = partitioned
    in_t = set(part.T_f.tolist())
    for v in part.EXP1.tolist():
        assert sum(w in in_t for w in s.red_adj[v]) < prm.absorb_threshold


def test_small_tiny_split(partitioned):
    s, prm, _, part = partitioned
    inner = part.blocks.inner
    for v in part.SMALL.tolist():
        assert sum(inner[w] for w in s.red_adj[v]) >= prm.small_threshold
    for v in part.TINY.tolist():
        assert sum(inner[w] for w in s.red_adj[v]) < prm.small_threshold
        # everything around a TINY vertex inside U has been exposed
        assert all(s.color(v, u) != EdgeColor.WHITE for u in part.U.tolist() if u != v)


def test_f_degree_guard():
    n = 400
    prm = ParamSet(n, k_factor=0.5, k_exp=1.0, f_deg_lo=0.99, f_deg_hi=1.01)
    s = ColorState(Oracle(n, 0.1, 3), 3)
    _, p1 = run_phase1(s, prm)
    with pytest.raises(PhaseFailure) as ei:
        run_phase2(s, p1.cycle, p1.U, prm)
    assert (ei.value.phase, ei.value.reason) == (2, "f_degree")


@given(L=st.integers(0, 200), b=st.integers(3, 20))
def test_blocks(L, b):
    order = list(np.random.default_rng(L).permutation(300)[:L])
    blk = block_decompose(order, 300, b)
    assert blk.count == L // b
    for j in range(1, blk.count + 1):
        mem = blk.members(j, order)
        assert len(mem) == b and all(blk.of[v] == j for v in mem)
        assert [bool(blk.inner[v]) for v in mem] == [False] + [True] * (b - 2) + [False]
    assert int(blk.inner.sum()) == blk.count * (b - 2)


def test_block_size_too_small():
    with pytest.raises(PhaseFailure):
        block_decompose(list(range(10)), 10, 2)
