"""Lazy edge oracle for G(n, p).

The hidden graph is never built. The answer for a pair is a keyed hash of
(seed, pair) compared against p, so two oracles with the same (n, p, seed)
agree on every pair, and different seeds give independent graphs.

Besides single queries the oracle offers bulk exposures (scans and blocks,
see ``exposure.py``) that charge exactly the pairs a sequential loop would
have queried, without materialising them.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from ._hash import derive_key, pair_uniform_np, pair_uniform_py
from .errors import ParameterError, RepeatedQuery
from .exposure import BlockSegment, ExposureLog, ScanSegment, children_csr

SALT_ORACLE = 0x0AC1E


@dataclass(frozen=True)
class Pair:
    u: int
    v: int

    @staticmethod
    def of(u: int, v: int) -> "Pair":
        u, v = int(u), int(v)
        if u == v:
            raise ParameterError(f"loop pair ({u}, {v})")
        return Pair(min(u, v), max(u, v))


@dataclass(frozen=True)
class QueryStats:
    total: int
    positives: int


@dataclass
class BlockResult:
    queries: int
    phys_queries: int
    positives: int
    red_u: np.ndarray
    red_v: np.ndarray
    degrees: np.ndarray | None
    exhausted: bool


@dataclass
class ScanResult:
    t_in: np.ndarray
    t_out: np.ndarray
    parent: np.ndarray
    stack: np.ndarray
    completed: np.ndarray
    queries: int
    positives: int
    considered: int
    rounds: int


class Oracle:
    def __init__(self, n: int, p: float, seed: int):
        if int(n) != n or n < 1:
            raise ParameterError(f"n must be a positive integer, got {n}")
        if not (0.0 <= p <= 1.0):
            raise ParameterError(f"p must lie in [0, 1], got {p}")
        if n >= 1 << 31:
            raise ParameterError("n too large for packed pair keys")
        self.n = int(n)
        self.p = float(p)
        self.seed = int(seed)
        self._key = derive_key(seed, SALT_ORACLE)
        self.log = ExposureLog(self.n)
        self._total = 0
        self._positives = 0

    def _check(self, u, v) -> Pair:
        e = Pair.of(u, v)
        if e.u < 0 or e.v >= self.n:
            raise ParameterError(f"pair ({u}, {v}) out of range for n={self.n}")
        return e

    def query(self, u: int, v: int) -> bool:
        e = self._check(u, v)
        if self.log.covered(e.u, e.v, phys=True):
            raise RepeatedQuery(f"pair ({e.u}, {e.v}) already queried")
        ans = pair_uniform_py(self._key, e.u, e.v) < self.p
        self.log.add_single(e.u, e.v, ans, phys=True)
        self._total += 1
        self._positives += int(ans)
        return ans

    def stats(self) -> QueryStats:
        return QueryStats(self._total, self._positives)

    def was_queried(self, u: int, v: int) -> bool:
        e = self._check(u, v)
        return self.log.covered(e.u, e.v, phys=True)

    def answered_positive(self, u: int, v: int) -> bool:
        """Transcript lookup: was (u, v) queried with a positive answer?"""
        if not self.was_queried(u, v):
            return False
        return pair_uniform_py(self._key, min(u, v), max(u, v)) < self.p

    def answered_positive_many(self, us, vs) -> np.ndarray:
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        q = self.log.covered_many(us, vs, phys=True)
        return q & (pair_uniform_np(self._key, us, vs) < self.p)

    # -- bulk exposures ---------------------------------------------------------
    def query_block(self, rows, cols, *, stop_after_red=False, fkey=0, fprob=1.0,
                    count_degrees=False, label="") -> BlockResult:
        """Query white pairs of rows x cols in row-major order.

        ``rows`` and ``cols`` are each duplicate-free; a pair reachable in
        both orientations is visited at its earlier position only.
        """
        n = self.n
        rows = np.ascontiguousarray(rows, dtype=np.int64)
        cols = np.ascontiguousarray(cols, dtype=np.int64)
        rowpos = np.full(n, -1, dtype=np.int64)
        rowpos[rows] = np.arange(rows.shape[0])
        colrank = np.full(n, -1, dtype=np.int64)
        colrank[cols] = np.arange(cols.shape[0])
        deg = np.zeros(n if count_degrees else 0, dtype=np.int64)
        if rows.size == 0 or cols.size == 0:
            return BlockResult(0, 0, 0, np.zeros(0, np.int64), np.zeros(0, np.int64),
                               deg if count_degrees else None, True)
        n_alg, n_phys, n_pos, ru, rv, cut_r, cut_c = K.run_block(
            self.log.flat(), rows, cols, rowpos, colrank, bool(stop_after_red),
            np.uint64(fkey), float(fprob), np.uint64(self._key), self.p, deg,
            bool(count_degrees))
        exhausted = not (stop_after_red and n_pos > 0)
        self.log.add_block(BlockSegment(rows, cols, int(cut_r), int(cut_c), int(fkey),
                                        float(fprob), n_alg, n_phys, n_pos, label))
        self._total += n_phys
        self._positives += n_pos
        return BlockResult(n_alg, n_phys, n_pos, ru, rv, deg if count_degrees else None,
                           exhausted)

    def query_dfs_scan(self, *, fkey, fprob, stop_balanced=True, label="dfs") -> ScanResult:
        """Filtered depth-first exploration from scratch (log must be empty)."""
        if not self.log.is_empty():
            raise RepeatedQuery("depth-first scan requires a fresh oracle")
        tin, tout, parent, stack, comp, nq, nphys, npos, ncons, rnd = K.scan_dfs(
            self.n, np.uint64(self._key), self.p, np.uint64(fkey), float(fprob),
            bool(stop_balanced), np.uint64(self.log.cap_key), float(self.log.cap_prob))
        ptr, idx = children_csr(self.n, parent)
        self.log.add_scan(ScanSegment(tin, tout, ptr, idx, int(fkey), float(fprob),
                                      nq, nphys, npos, label))
        self._total += nphys
        self._positives += npos
        return ScanResult(tin, tout, parent, stack, comp, nq, npos, ncons, rnd)

    def query_tree_scan(self, label="tree") -> ScanResult:
        """Grow a spanning tree from vertex 0 (log must be empty)."""
        if not self.log.is_empty() or self.log.cap_prob < 1.0:
            raise RepeatedQuery("tree scan requires a fresh, uncapped oracle")
        tin, tout, parent, order, nq, npos = K.scan_tree(self.n, np.uint64(self._key), self.p)
        ptr, idx = children_csr(self.n, parent)
        self.log.add_scan(ScanSegment(tin, tout, ptr, idx, 0, 1.0, nq, nq, npos, label))
        self._total += nq
        self._positives += npos
        return ScanResult(tin, tout, parent, order, order, nq, npos, nq, 0)

    # -- transcript -------------------------------------------------------------
    def transcript(self):
        """All physical queries as (u, v, answer), in query order."""
        return list(self.log.iter_events(self._key, self.p, phys=True))

    def dump_transcript(self, path) -> None:
        with open(path, "w") as fh:
            for u, v, a in self.transcript():
                fh.write(f"{u} {v} {int(a)}\n")

    def _answer_for_kernel(self):
        # key and p for kernels that must classify pairs the oracle already answered
        return np.uint64(self._key), self.p
