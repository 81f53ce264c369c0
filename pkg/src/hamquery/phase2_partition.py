"""Phase II: split the leftover vertices by how well they connect.

The vertices off the first cycle form the set U. A q'-filtered sample F of
the white pairs inside U is exposed; vertices with few F-red neighbours seed
T0, which then absorbs every vertex with at least ``absorb_threshold`` red
neighbours inside it. The rest of U is EXP1 (expander-like). T_f splits into
SMALL (enough red neighbours on the inner parts of the cycle's blocks) and
TINY; all remaining white pairs touching TINY inside U are then exposed.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import PhaseFailure
from .params import ParamSet
from .tricolor import ColorState


@dataclass
class FSample:
    degrees: np.ndarray
    red_degrees: np.ndarray
    red_u: np.ndarray
    red_v: np.ndarray
    queries: int


@dataclass
class Blocks:
    """Consecutive blocks of the first cycle (1-indexed; 0 means no block)."""

    size: int
    count: int
    of: np.ndarray
    inner: np.ndarray

    def members(self, j: int, cycle_order) -> list[int]:
        return list(cycle_order[(j - 1) * self.size:j * self.size])


@dataclass
class PartitionOut:
    U: np.ndarray
    T0: np.ndarray
    T_f: np.ndarray
    EXP1: np.ndarray
    SMALL: np.ndarray
    TINY: np.ndarray
    blocks: Blocks
    telemetry: dict = field(default_factory=dict)


def sample_and_recolour_F(s: ColorState, U, params: ParamSet) -> FSample:
    U = np.sort(np.asarray(U, dtype=np.int64))
    qp = params.q_prime
    res = s.recolour_block(U, U, filter_prob=qp, count_degrees=True, label="phase2-F")
    deg = res.degrees[U]
    lo, hi = params.f_deg_lo * U.shape[0] * qp, params.f_deg_hi * U.shape[0] * qp
    bad = np.flatnonzero((deg < lo) | (deg > hi))
    if bad.size:
        v = int(U[bad[0]])
        raise PhaseFailure(2, "f_degree",
                           f"{bad.size} vertices outside [{lo:.1f}, {hi:.1f}], e.g. {v} with {int(deg[bad[0]])}")
    red_deg = np.zeros(s.n, dtype=np.int64)
    np.add.at(red_deg, res.red_u, 1)
    np.add.at(red_deg, res.red_v, 1)
    return FSample(res.degrees, red_deg, res.red_u, res.red_v, res.queries)


def absorb_T(s: ColorState, U, f_red_degree, params: ParamSet) -> tuple[np.ndarray, np.ndarray]:
    """Seed T0 from low F-red degree, then absorb lowest index first."""
    U = np.sort(np.asarray(U, dtype=np.int64))
    thr = params.t0_factor * U.shape[0] * s.p * params.q_prime
    T0 = U[f_red_degree[U] < thr]
    if T0.shape[0] > params.t0_cap:
        raise PhaseFailure(2, "t0_cap", f"|T0|={T0.shape[0]} > {params.t0_cap:.1f}")
    in_u = np.zeros(s.n, dtype=bool)
    in_u[U] = True
    in_t = np.zeros(s.n, dtype=bool)
    in_t[T0] = True
    cnt = np.zeros(s.n, dtype=np.int64)
    need = params.absorb_threshold
    for t in T0.tolist():
        for w in s.red_adj[t]:
            if in_u[w] and not in_t[w]:
                cnt[w] += 1
    heap = [int(v) for v in U[(cnt[U] >= need) & ~in_t[U]]]
    heapq.heapify(heap)
    while heap:
        v = heapq.heappop(heap)
        if in_t[v]:
            continue
        in_t[v] = True
        for w in s.red_adj[v]:
            if in_u[w] and not in_t[w]:
                cnt[w] += 1
                if cnt[w] == need:
                    heapq.heappush(heap, w)
    T_f = np.flatnonzero(in_t)
    if T_f.shape[0] > params.tf_ratio * T0.shape[0]:
        raise PhaseFailure(2, "tf_ratio", f"|T_f|={T_f.shape[0]} > {params.tf_ratio}*|T0|={T0.shape[0]}")
    return T0, T_f


def block_decompose(cycle_order, n: int, block_size: int) -> Blocks:
    """Cut the cycle into floor(L/b) blocks; inner = block minus its two ends."""
    L = len(cycle_order)
    b = int(block_size)
    if b < 3:
        raise PhaseFailure(2, "block_size", f"block size {b} leaves no inner vertices")
    m = L // b
    of = np.zeros(n, dtype=np.int64)
    inner = np.zeros(n, dtype=bool)
    arr = np.asarray(cycle_order[:m * b], dtype=np.int64)
    if m:
        of[arr] = np.repeat(np.arange(1, m + 1), b)
        blk = arr.reshape(m, b)
        inner[blk[:, 1:-1].ravel()] = True
    return Blocks(b, m, of, inner)


def classify_small_tiny(s: ColorState, T_f, cycle_order, U, blocks: Blocks,
                        params: ParamSet) -> tuple[np.ndarray, np.ndarray]:
    T_f = np.sort(np.asarray(T_f, dtype=np.int64))
    cyc = np.sort(np.asarray(cycle_order, dtype=np.int64))
    s.recolour_block(T_f, cyc, label="phase2-Tf")
    thr = params.small_threshold
    small, tiny = [], []
    for v in T_f.tolist():
        d = sum(1 for w in s.red_adj[v] if blocks.inner[w])
        (small if d >= thr else tiny).append(v)
    if len(tiny) > params.tiny_cap:
        raise PhaseFailure(2, "tiny_cap", f"|TINY|={len(tiny)} > {params.tiny_cap:.1f}")
    U = np.sort(np.asarray(U, dtype=np.int64))
    if tiny:
        s.recolour_block(np.array(tiny, dtype=np.int64), U, label="phase2-tiny")
        if params.check_events:
            for v in tiny:
                if len(s.red_adj[v]) < 2:
                    raise PhaseFailure(2, "N2", f"fully exposed vertex {v} has red degree {len(s.red_adj[v])}")
    return np.array(small, dtype=np.int64), np.array(tiny, dtype=np.int64)


def run_phase2(s: ColorState, cycle_order, U, params: ParamSet) -> PartitionOut:
    U = np.sort(np.asarray(U, dtype=np.int64))
    fs = sample_and_recolour_F(s, U, params)
    T0, T_f = absorb_T(s, U, fs.red_degrees, params)
    blocks = block_decompose(cycle_order, s.n, params.block_size)
    small, tiny = classify_small_tiny(s, T_f, cycle_order, U, blocks, params)
    in_t = np.zeros(s.n, dtype=bool)
    in_t[T_f] = True
    exp1 = U[~in_t[U]]
    tel = {"U": int(U.shape[0]), "F_queries": fs.queries, "T0": int(T0.shape[0]),
           "T_f": int(T_f.shape[0]), "SMALL": int(small.shape[0]), "TINY": int(tiny.shape[0]),
           "blocks": blocks.count}
    return PartitionOut(U, T0, T_f, exp1, small, tiny, blocks, tel)
