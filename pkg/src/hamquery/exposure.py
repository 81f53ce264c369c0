"""Compact record of every pair exposed to an oracle.

Large strategies expose hundreds of millions of pairs, far too many to store
one by one. The log keeps three kinds of events:

* explicit singles, stored in a dict;
* scan segments, produced by a scanner that visits the still-unvisited
  vertices in increasing order (depth-first or tree growth). A segment is
  described by discovery rounds, exhaustion rounds and the child lists;
* block segments: a rows x cols product visited in row-major order, possibly
  cut short at the first positive, possibly thinned by a keyed coin.

Membership of a pair is decided by the kernels in ``_kernels.py``. A pair is
never exposed twice, so the first covering event is the one that queried it.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from ._hash import pack_pair, pair_uniform_np, unpack_pair

INF = int(K.INF)


@dataclass
class ScanSegment:
    t_in: np.ndarray
    t_out: np.ndarray
    child_ptr: np.ndarray
    child_idx: np.ndarray
    fkey: int
    fprob: float
    n_alg: int
    n_phys: int
    n_pos: int
    label: str = ""


@dataclass
class BlockSegment:
    rows: np.ndarray
    cols: np.ndarray
    cut_r: int
    cut_c: int
    fkey: int
    fprob: float
    n_alg: int
    n_phys: int
    n_pos: int
    label: str = ""


def children_csr(n: int, parent: np.ndarray):
    """Per-vertex sorted child lists from a parent array (-1 = none)."""
    kids = np.flatnonzero(parent >= 0)
    par = parent[kids]
    order = np.lexsort((kids, par))
    kids = kids[order]
    par = par[order]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, par + 1, 1)
    np.cumsum(ptr, out=ptr)
    return ptr, kids.astype(np.int64)


@dataclass
class ExposureLog:
    n: int
    explicit: dict = field(default_factory=dict)
    scans: list = field(default_factory=list)
    blocks: list = field(default_factory=list)
    events: list = field(default_factory=list)
    cap_key: int = 0
    cap_prob: float = 1.0

    def __post_init__(self):
        self._flat = None
        self._ex_dirty = True
        self._ex_keys = np.zeros(0, dtype=np.uint64)
        self._ex_phys = np.zeros(0, dtype=np.uint8)
        self._seg_dirty = True
        self._seg_cache = None

    # -- mutation -----------------------------------------------------------
    def add_single(self, u: int, v: int, answer: bool, phys: bool = True):
        k = pack_pair(u, v)
        self.explicit[k] = (bool(answer), bool(phys))
        self.events.append(("x", k))
        self._ex_dirty = True
        self._flat = None

    def add_scan(self, seg: ScanSegment):
        self.scans.append(seg)
        self.events.append(("s", len(self.scans) - 1))
        self._seg_dirty = True
        self._flat = None

    def add_block(self, seg: BlockSegment):
        self.blocks.append(seg)
        self.events.append(("b", len(self.blocks) - 1))
        self._seg_dirty = True
        self._flat = None

    def is_empty(self) -> bool:
        return not self.events

    # -- flattened view for kernels -------------------------------------------
    def flat(self):
        if self._flat is not None:
            return self._flat
        n = self.n
        if self._ex_dirty:
            if self.explicit:
                keys = np.fromiter(self.explicit.keys(), dtype=np.uint64, count=len(self.explicit))
                phys = np.fromiter((v[1] for v in self.explicit.values()), dtype=np.uint8,
                                   count=len(self.explicit))
                order = np.argsort(keys, kind="stable")
                self._ex_keys = keys[order]
                self._ex_phys = phys[order]
            else:
                self._ex_keys = np.zeros(0, dtype=np.uint64)
                self._ex_phys = np.zeros(0, dtype=np.uint8)
            self._ex_dirty = False
        if self._seg_dirty:
            self._seg_cache = self._build_segments()
            self._seg_dirty = False
        self._flat = (self._ex_keys, self._ex_phys) + self._seg_cache + (
            np.array([self.cap_key], dtype=np.uint64),
            np.array([self.cap_prob], dtype=np.float64),
        )
        return self._flat

    def _build_segments(self):
        n = self.n
        S = len(self.scans)
        tin = np.zeros((S, n), dtype=np.int64)
        tout = np.zeros((S, n), dtype=np.int64)
        cptr = np.zeros((S, n + 1), dtype=np.int64)
        cidx_parts = []
        off = 0
        for s, seg in enumerate(self.scans):
            tin[s] = seg.t_in
            tout[s] = seg.t_out
            cptr[s] = seg.child_ptr + off
            cidx_parts.append(seg.child_idx)
            off += seg.child_idx.shape[0]
        cidx = np.concatenate(cidx_parts) if cidx_parts else np.zeros(0, dtype=np.int64)
        sfkey = np.array([s.fkey for s in self.scans], dtype=np.uint64)
        sfprob = np.array([s.fprob for s in self.scans], dtype=np.float64)

        B = len(self.blocks)
        rv, rs, rp = [], [], []
        bptr = np.zeros(B + 1, dtype=np.int64)
        cols_parts, rank_parts = [], []
        for b, seg in enumerate(self.blocks):
            nr = min(seg.cut_r + 1, seg.rows.shape[0])
            rv.append(seg.rows[:nr])
            rs.append(np.full(nr, b, dtype=np.int64))
            rp.append(np.arange(nr, dtype=np.int64))
            order = np.argsort(seg.cols, kind="stable")
            cols_parts.append(seg.cols[order])
            rank_parts.append(order.astype(np.int64))
            bptr[b + 1] = bptr[b] + seg.cols.shape[0]
        if rv:
            rv = np.concatenate(rv)
            rs = np.concatenate(rs)
            rp = np.concatenate(rp)
            order = np.argsort(rv, kind="stable")
            rv, rs, rp = rv[order], rs[order], rp[order]
            bcols = np.concatenate(cols_parts)
            brank = np.concatenate(rank_parts)
        else:
            rv = rs = rp = np.zeros(0, dtype=np.int64)
            bcols = brank = np.zeros(0, dtype=np.int64)
        rptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(rptr, rv + 1, 1)
        np.cumsum(rptr, out=rptr)
        cut_r = np.array([s.cut_r for s in self.blocks], dtype=np.int64)
        cut_c = np.array([s.cut_c for s in self.blocks], dtype=np.int64)
        bfkey = np.array([s.fkey for s in self.blocks], dtype=np.uint64)
        bfprob = np.array([s.fprob for s in self.blocks], dtype=np.float64)
        return (tin, tout, cptr, cidx, sfkey, sfprob, rptr, rs, rp,
                bptr, bcols, brank, cut_r, cut_c, bfkey, bfprob)

    # -- queries --------------------------------------------------------------
    def covered(self, u: int, v: int, phys: bool = True) -> bool:
        k = pack_pair(u, v)
        hit = self.explicit.get(k)
        if hit is not None and (hit[1] or not phys):
            return True
        if not self.scans and not self.blocks:
            return False
        return bool(K.covered_pair(self.flat(), int(u), int(v), phys))

    def covered_many(self, us, vs, phys: bool = True) -> np.ndarray:
        us = np.ascontiguousarray(us, dtype=np.int64)
        vs = np.ascontiguousarray(vs, dtype=np.int64)
        if us.size == 0:
            return np.zeros(0, dtype=bool)
        return K.covered_many(self.flat(), us, vs, phys).astype(bool)

    def iter_events(self, okey: int, p: float, phys: bool = True):
        """Yield (u, v, answer) for every exposed pair in time order.

        Quadratic in n per segment; intended for small instances and dumps.
        """
        seen = set()
        n = self.n
        for kind, idx in self.events:
            if kind == "x":
                ans, is_phys = self.explicit[idx]
                if idx in seen or (phys and not is_phys):
                    continue
                seen.add(idx)
                u, v = unpack_pair(idx)
                yield u, v, ans
            elif kind == "s":
                seg = self.scans[idx]
                pairs = []
                for a in range(n):
                    lo, hi = seg.child_ptr[a], seg.child_ptr[a + 1]
                    kids = seg.child_idx[lo:hi]
                    for u in range(n):
                        if u == a:
                            continue
                        j = np.searchsorted(kids, u)
                        if j < kids.shape[0]:
                            r = seg.t_in[kids[j]]
                        else:
                            r = seg.t_out[a]
                            if r >= INF:
                                continue
                        if seg.t_in[u] >= r:
                            pairs.append((int(r), u, a))
                pairs.sort()
                yield from self._emit(pairs, seg.fkey, seg.fprob, okey, p, seen, phys)
            else:
                seg = self.blocks[idx]
                pairs = []
                for ri in range(min(seg.cut_r + 1, seg.rows.shape[0])):
                    last = seg.cut_c if ri == seg.cut_r else seg.cols.shape[0] - 1
                    for ci in range(last + 1):
                        r, c = int(seg.rows[ri]), int(seg.cols[ci])
                        if r != c:
                            pairs.append((0, c, r))
                yield from self._emit(pairs, seg.fkey, seg.fprob, okey, p, seen, phys)

    def _emit(self, pairs, fkey, fprob, okey, p, seen, phys):
        if not pairs:
            return
        arr = np.array([(a, u) for _, u, a in pairs], dtype=np.int64)
        coin = pair_uniform_np(fkey, arr[:, 0], arr[:, 1])
        ans = pair_uniform_np(okey, arr[:, 0], arr[:, 1]) < p
        if self.cap_prob < 1.0:
            capc = pair_uniform_np(self.cap_key, arr[:, 0], arr[:, 1]) < self.cap_prob
        else:
            capc = np.ones(arr.shape[0], dtype=bool)
        for i in range(arr.shape[0]):
            if coin[i] >= fprob:
                continue
            k = pack_pair(int(arr[i, 0]), int(arr[i, 1]))
            if k in seen:
                continue
            seen.add(k)
            if phys and not capc[i]:
                continue
            u, v = unpack_pair(k)
            yield u, v, bool(ans[i] and capc[i])
