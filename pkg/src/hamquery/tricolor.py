"""Three-colour bookkeeping of the pairs of K_n.

White pairs are unexposed, red pairs were answered positively, blue pairs
negatively. All exposures go through the oracle, so red and blue together are
exactly the oracle transcript (or, under capped exposure, the transcript plus
the pairs the coupling coin chose to skip).

Red edges are kept explicitly; there are O(n) of them. Blue pairs are only
known implicitly through the exposure log.
"""

import enum
import itertools

import numpy as np
from scipy import sparse

from ._hash import derive_key, pair_uniform_py
from .errors import IllegalRecolour, ParameterError
from .oracle import BlockResult, Oracle, Pair, ScanResult
from .params import ParamSet

__all__ = ["EdgeColor", "ColorState", "ParamSet"]

SALT_CAP = 0xCA9
SALT_FILTER = 0xF117


class EdgeColor(enum.IntEnum):
    WHITE = 0
    RED = 1
    BLUE = 2
    SKIPPED = 3


class ColorState:
    def __init__(self, oracle: Oracle, alg_seed: int = 0, p_eff: float | None = None):
        self.oracle = oracle
        self.n = oracle.n
        self.log = oracle.log
        self.alg_seed = int(alg_seed)
        self._keys = itertools.count(1)
        self.p = oracle.p
        if p_eff is not None and p_eff < oracle.p:
            if not self.log.is_empty():
                raise ParameterError("capped exposure must be set up before any query")
            self.log.cap_key = derive_key(alg_seed, SALT_CAP)
            self.log.cap_prob = p_eff / oracle.p
            self.p = float(p_eff)
        self.red_adj = [set() for _ in range(self.n)]
        self._red_u: list[int] = []
        self._red_v: list[int] = []
        self.n_exposed = 0

    @property
    def capped(self) -> bool:
        return self.log.cap_prob < 1.0

    @property
    def n_red(self) -> int:
        return len(self._red_u)

    @property
    def n_blue(self) -> int:
        return self.n_exposed - self.n_red

    def new_key(self) -> int:
        """Fresh key for a keyed filter coin."""
        return derive_key(self.alg_seed, SALT_FILTER, next(self._keys))

    # -- colour lookups ---------------------------------------------------------
    def color(self, u: int, v: int) -> EdgeColor:
        e = Pair.of(u, v)
        if e.v in self.red_adj[e.u]:
            return EdgeColor.RED
        if self.log.covered(e.u, e.v, phys=False):
            return EdgeColor.BLUE
        return EdgeColor.WHITE

    def colors(self, us, vs) -> np.ndarray:
        """Vectorised colour lookup; returns int8 codes of EdgeColor."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        out = self.log.covered_many(us, vs, phys=False).astype(np.int8) * 2
        for i in np.flatnonzero(out):
            if int(vs[i]) in self.red_adj[int(us[i])]:
                out[i] = 1
        return out

    def is_white(self, u: int, v: int) -> bool:
        return self.color(u, v) == EdgeColor.WHITE

    def white_mask(self, v: int, targets) -> np.ndarray:
        targets = np.asarray(targets, dtype=np.int64)
        us = np.full(targets.shape[0], v, dtype=np.int64)
        ok = targets != v
        out = np.zeros(targets.shape[0], dtype=bool)
        out[ok] = ~self.log.covered_many(us[ok], targets[ok], phys=False)
        return out

    def white_neighbors(self, v: int, targets) -> np.ndarray:
        targets = np.asarray(targets, dtype=np.int64)
        return targets[self.white_mask(v, targets)]

    def white_degree(self, v: int, targets) -> int:
        return int(self.white_mask(v, targets).sum())

    # -- red graph --------------------------------------------------------------
    def _add_red(self, u: int, v: int):
        self.red_adj[u].add(v)
        self.red_adj[v].add(u)
        self._red_u.append(u)
        self._red_v.append(v)

    def red_neighbors(self, v: int, within=None) -> list[int]:
        """Sorted red neighbours, optionally restricted by a boolean mask."""
        nb = self.red_adj[v]
        if within is None:
            return sorted(nb)
        return sorted(w for w in nb if within[w])

    def red_degree(self, v: int, within=None) -> int:
        if within is None:
            return len(self.red_adj[v])
        return sum(1 for w in self.red_adj[v] if within[w])

    def red_edges(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array(self._red_u, dtype=np.int64), np.array(self._red_v, dtype=np.int64))

    def red_csr(self, within=None) -> sparse.csr_matrix:
        """Symmetric adjacency of the red graph (restricted to a mask if given)."""
        u, v = self.red_edges()
        if within is not None:
            keep = within[u] & within[v]
            u, v = u[keep], v[keep]
        data = np.ones(2 * u.shape[0], dtype=np.int8)
        m = sparse.csr_matrix((data, (np.concatenate([u, v]), np.concatenate([v, u]))),
                              shape=(self.n, self.n))
        m.sum_duplicates()
        m.sort_indices()
        return m

    # -- recolouring ------------------------------------------------------------
    def recolour(self, u: int, v: int) -> EdgeColor:
        """Expose a white pair. Under capped exposure the coupling coin may
        turn it blue without an oracle query."""
        e = Pair.of(u, v)
        if self.color(e.u, e.v) != EdgeColor.WHITE:
            raise IllegalRecolour(f"pair ({e.u}, {e.v}) is not white")
        if self.capped and pair_uniform_py(self.log.cap_key, e.u, e.v) >= self.log.cap_prob:
            self.log.add_single(e.u, e.v, False, phys=False)
            self.n_exposed += 1
            return EdgeColor.BLUE
        return self._query(e)

    def _query(self, e: Pair) -> EdgeColor:
        ans = self.oracle.query(e.u, e.v)
        self.n_exposed += 1
        if ans:
            self._add_red(e.u, e.v)
            return EdgeColor.RED
        return EdgeColor.BLUE

    def recolour_filtered(self, u: int, v: int, qf: float, algrng) -> EdgeColor:
        """With probability qf recolour the pair, otherwise leave it white."""
        e = Pair.of(u, v)
        if self.color(e.u, e.v) != EdgeColor.WHITE:
            raise IllegalRecolour(f"pair ({e.u}, {e.v}) is not white")
        if algrng.random() >= qf:
            return EdgeColor.WHITE
        return self.recolour(e.u, e.v)

    def recolour_capped(self, u: int, v: int, p_eff: float, algrng) -> EdgeColor:
        """Expose at the lower rate p_eff: skip with probability 1 - p_eff/p.

        A skipped pair is blue for the algorithm but never reaches the oracle.
        """
        if not (0.0 <= p_eff <= self.oracle.p):
            raise ParameterError("p_eff must lie in [0, p]")
        e = Pair.of(u, v)
        if self.color(e.u, e.v) != EdgeColor.WHITE:
            raise IllegalRecolour(f"pair ({e.u}, {e.v}) is not white")
        if self.oracle.p == 0 or algrng.random() >= p_eff / self.oracle.p:
            self.log.add_single(e.u, e.v, False, phys=False)
            self.n_exposed += 1
            return EdgeColor.SKIPPED
        return self._query(e)

    def recolour_block(self, rows, cols, *, stop_after_red=False, filter_prob=1.0,
                       count_degrees=False, label="") -> BlockResult:
        """Recolour the white pairs of rows x cols in row-major order.

        With ``filter_prob`` < 1 each pair is exposed only if its keyed coin
        passes (the others stay white). ``stop_after_red`` ends the sweep at
        the first red answer.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        fkey = self.new_key() if filter_prob < 1.0 else 0
        res = self.oracle.query_block(rows, cols, stop_after_red=stop_after_red, fkey=fkey,
                                      fprob=filter_prob, count_degrees=count_degrees,
                                      label=label)
        self.n_exposed += res.queries
        for a, b in zip(res.red_u.tolist(), res.red_v.tolist()):
            self._add_red(a, b)
        return res

    def first_red(self, v: int, targets, label="") -> int | None:
        """Recolour v x targets in order until the first red; return it."""
        res = self.recolour_block([v], targets, stop_after_red=True, label=label)
        if res.positives == 0:
            return None
        return int(res.red_v[0]) if int(res.red_u[0]) == v else int(res.red_u[0])

    def run_dfs(self, q: float) -> ScanResult:
        """Filtered depth-first exploration from an all-white state."""
        res = self.oracle.query_dfs_scan(fkey=self.new_key(), fprob=q)
        self.n_exposed += res.queries
        kids = np.flatnonzero(res.parent >= 0)
        for c in kids.tolist():
            self._add_red(int(res.parent[c]), c)
        return res
