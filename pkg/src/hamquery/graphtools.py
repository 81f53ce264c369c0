"""Graph primitives shared by the phases and the verifiers.

Everything here is a pure function of its inputs: no oracle access, no
mutation of the arguments.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components, maximum_bipartite_matching

from . import _kernels as K
from .errors import ContractError, MatchingInfeasible, ParameterError


class SimpleGraph:
    """Undirected simple graph on vertices 0..n-1 stored as CSR.

    Neighbour lists are sorted; loops and duplicate edges are dropped on
    construction.
    """

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        self.n = int(n)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)

    @classmethod
    def from_edges(cls, n: int, edges) -> "SimpleGraph":
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                       dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ParameterError("edge endpoint out of range")
        e = e[e[:, 0] != e[:, 1]]
        u = np.concatenate([e[:, 0], e[:, 1]])
        v = np.concatenate([e[:, 1], e[:, 0]])
        m = sparse.csr_matrix((np.ones(u.shape[0], dtype=np.int8), (u, v)), shape=(n, n))
        m.sum_duplicates()
        m.sort_indices()
        return cls(n, m.indptr, m.indices)

    @classmethod
    def from_csr(cls, m: sparse.csr_matrix) -> "SimpleGraph":
        m = m.tocsr()
        m.sort_indices()
        return cls(m.shape[0], m.indptr, m.indices)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int | None = None):
        d = np.diff(self.indptr)
        return d if v is None else int(d[v])

    @property
    def m(self) -> int:
        return int(self.indices.shape[0] // 2)

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.shape[0] and nb[i] == v)

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for u in range(self.n):
            for v in self.neighbors(u).tolist():
                if u < v:
                    out.append((u, v))
        return out

    def adj_sets(self) -> list[set]:
        return [set(self.neighbors(v).tolist()) for v in range(self.n)]

    def adj_masks(self) -> list[int]:
        out = []
        for v in range(self.n):
            m = 0
            for w in self.neighbors(v).tolist():
                m |= 1 << w
            out.append(m)
        return out

    def to_csr(self) -> sparse.csr_matrix:
        data = np.ones(self.indices.shape[0], dtype=np.int8)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def with_edges(self, extra) -> "SimpleGraph":
        return SimpleGraph.from_edges(self.n, self.edges() + [tuple(e) for e in extra])

    def write(self, path) -> None:
        edges = self.edges()
        with open(path, "w") as fh:
            fh.write(f"{self.n} {len(edges)}\n")
            for u, v in edges:
                fh.write(f"{u} {v}\n")

    @classmethod
    def read(cls, path) -> "SimpleGraph":
        with open(path) as fh:
            head = fh.readline().split()
            if len(head) != 2:
                raise ParameterError("edge-list header must be 'n m'")
            n, m = int(head[0]), int(head[1])
            edges = []
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                a, b = line.split()[:2]
                edges.append((int(a), int(b)))
        if len(edges) != m:
            raise ParameterError(f"header announces {m} edges, found {len(edges)}")
        return cls.from_edges(n, edges)


def _as_mask(n: int, S) -> np.ndarray:
    if S is None:
        return np.ones(n, dtype=bool)
    S = np.asarray(S)
    if S.dtype == bool:
        return S
    mask = np.zeros(n, dtype=bool)
    mask[S.astype(np.int64)] = True
    return mask


def largest_component(g: SimpleGraph, within=None) -> np.ndarray:
    """Vertices of the largest component of g[within] (ties: smallest vertex)."""
    mask = _as_mask(g.n, within)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return idx
    sub = g.to_csr()[idx][:, idx]
    _, lab = connected_components(sub, directed=False)
    sizes = np.bincount(lab)
    best = np.flatnonzero(sizes == sizes.max())
    # labels are assigned in order of first appearance, so the smallest label
    # among the largest components contains the smallest vertex
    return idx[lab == best.min()]


def kcore(g: SimpleGraph, d: int, within=None) -> np.ndarray:
    """Maximal induced subgraph of minimum degree >= d (all components)."""
    mask = _as_mask(g.n, within)
    alive = K.kcore_mask(g.indptr, g.indices, mask.astype(np.bool_), int(d))
    return np.flatnonzero(alive)


def min_degree_core(g: SimpleGraph, d: int, within=None) -> np.ndarray:
    """Largest connected component of the d-core (empty if the core is empty)."""
    core = kcore(g, d, within)
    if core.size == 0:
        return core
    return largest_component(g, core)


def star_matching(nbrs: dict, k: int) -> dict:
    """Pick disjoint k-subsets J_a of nbrs[a] for every left vertex a.

    Solved as a bipartite matching with each left vertex copied k times.
    Raises MatchingInfeasible when Hall's condition fails.
    """
    left = sorted(nbrs)
    if k < 1:
        return {a: [] for a in left}
    right = sorted({b for a in left for b in nbrs[a]})
    rid = {b: i for i, b in enumerate(right)}
    rows, cols = [], []
    for i, a in enumerate(left):
        for b in sorted(set(nbrs[a])):
            for c in range(k):
                rows.append(i * k + c)
                cols.append(rid[b])
    nl = len(left) * k
    if nl == 0:
        return {}
    if len(right) < nl:
        raise MatchingInfeasible(f"{nl} slots but only {len(right)} right vertices")
    g = sparse.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                          shape=(nl, len(right)))
    match = maximum_bipartite_matching(g, perm_type="column")
    if (match < 0).any():
        bad = left[int(np.flatnonzero(match < 0)[0]) // k]
        raise MatchingInfeasible(f"no k-star for left vertex {bad}")
    out = {}
    used = set()
    for i, a in enumerate(left):
        picks = sorted(right[int(match[i * k + c])] for c in range(k))
        if len(set(picks)) != k or used.intersection(picks) or not set(picks) <= set(nbrs[a]):
            raise ContractError("matching solver returned an invalid star")
        used.update(picks)
        out[a] = picks
    return out


def bfs_distances(g: SimpleGraph, S, src: int) -> np.ndarray:
    mask = _as_mask(g.n, S)
    if not mask[src]:
        raise ParameterError(f"source {src} outside the vertex set")
    return K.bfs_dist(g.indptr, g.indices, mask, int(src))


def diameter_within(g: SimpleGraph, S, bound: float, exact: bool = False,
                    max_exact: int | None = None) -> bool:
    """Is g[S] connected with diameter <= bound?

    Without ``exact`` a cheap certificate is tried first: from a centre c,
    diam <= 2 ecc(c). Only if that fails are all sources scanned, and only
    when |S| <= max_exact (otherwise the answer is a conservative False).
    """
    mask = _as_mask(g.n, S)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return False
    dist = bfs_distances(g, mask, int(idx[0]))
    if (dist[idx] < 0).any():
        return False
    if not exact:
        far = int(idx[np.argmax(dist[idx])])
        d2 = bfs_distances(g, mask, far)
        lower = int(d2[idx].max())
        if lower > bound:
            return False
        mid = _path_midpoint(g, mask, far, d2, lower)
        ecc = int(bfs_distances(g, mask, mid)[idx].max())
        if 2 * ecc <= bound:
            return True
        if max_exact is not None and idx.size > max_exact:
            return False
    return diameter(g, mask) <= bound


def _path_midpoint(g, mask, src, dist, length):
    # walk back from a farthest vertex to the middle of a shortest path
    idx = np.flatnonzero(mask)
    v = int(idx[np.argmax(dist[idx])])
    target = length // 2
    while dist[v] > target:
        for w in g.neighbors(v).tolist():
            if mask[w] and dist[w] == dist[v] - 1:
                v = w
                break
    return v


def diameter(g: SimpleGraph, S=None) -> float:
    """Exact diameter of g[S] by BFS from every vertex (inf if disconnected)."""
    mask = _as_mask(g.n, S)
    idx = np.flatnonzero(mask)
    best = 0
    for s in idx.tolist():
        d = K.bfs_dist(g.indptr, g.indices, mask, s)[idx]
        if (d < 0).any():
            return float("inf")
        best = max(best, int(d.max()))
    return best


def shortest_red_path(g: SimpleGraph, S, u: int, v: int) -> list[int] | None:
    """A shortest u-v path inside g[S], or None if v is unreachable."""
    mask = _as_mask(g.n, S)
    if not (mask[u] and mask[v]):
        raise ParameterError("path endpoints must lie in S")
    if u == v:
        return [u]
    dist = K.bfs_dist(g.indptr, g.indices, mask, int(v))
    if dist[u] < 0:
        return None
    path = [u]
    x = u
    while x != v:
        for w in g.neighbors(x).tolist():
            if mask[w] and dist[w] == dist[x] - 1:
                x = w
                break
        path.append(x)
    return path


# -- pseudorandomness ---------------------------------------------------------

@dataclass
class PseudorandomResult:
    holds: bool
    witness: tuple | None = None
    mode: str = "exact"
    checked: int = 0

    def __bool__(self):
        return self.holds


def is_k_pseudorandom(g: SimpleGraph, k: int, mode: str = "exact", trials: int = 1000,
                      rng=None) -> PseudorandomResult:
    """Every two disjoint vertex sets of size k span at least one edge.

    Exact mode enumerates all k-sets A and looks for k vertices outside
    A with no neighbour in A; sampled mode draws random disjoint pairs.
    """
    n = g.n
    if k < 1:
        raise ParameterError("k must be positive")
    if 2 * k > n:
        return PseudorandomResult(True, None, mode, 0)
    masks = g.adj_masks()
    if mode == "exact":
        if n > 24:
            raise ParameterError("exact pseudorandomness check limited to n <= 24")
        full = (1 << n) - 1
        count = 0
        for A in itertools.combinations(range(n), k):
            count += 1
            am = 0
            nb = 0
            for a in A:
                am |= 1 << a
                nb |= masks[a]
            free = full & ~am & ~nb
            if bin(free).count("1") >= k:
                B = [v for v in range(n) if free >> v & 1][:k]
                return PseudorandomResult(False, (tuple(A), tuple(B)), mode, count)
        return PseudorandomResult(True, None, mode, count)
    if mode != "sampled":
        raise ParameterError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    for t in range(trials):
        perm = rng.permutation(n)
        A, B = perm[:k], perm[k:2 * k]
        am = 0
        for a in A.tolist():
            am |= masks[a]
        if not any(am >> b & 1 for b in B.tolist()):
            return PseudorandomResult(False, (tuple(sorted(A.tolist())), tuple(sorted(B.tolist()))),
                                      mode, t + 1)
    return PseudorandomResult(True, None, mode, trials)


# -- N-events --------------------------------------------------------------

@dataclass
class NReport:
    results: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(v is not False for v in self.results.values())

    def as_dict(self) -> dict:
        return {k: {"pass": v, "witness": self.witnesses.get(k)} for k, v in self.results.items()}


def _short_cycles_through(adj, v, L, limit, lowest=True):
    """Vertex sets of simple cycles through v of length <= L (bounded count).

    With ``lowest`` only cycles whose smallest vertex is v are listed.
    """
    out = []
    path = [v]
    on = {v}

    def rec(x):
        if len(out) >= limit:
            return
        for w in adj[x]:
            if w == v and len(path) >= 3:
                out.append(frozenset(path))
            elif w not in on and len(path) < L and (w > v or not lowest):
                on.add(w)
                path.append(w)
                rec(w)
                path.pop()
                on.discard(w)

    rec(v)
    return out


def _trail_counts(adj, u, max_len, cap):
    """Number of trails of length <= max_len from u to every other vertex."""
    counts = {}
    used = set()

    def rec(x, depth):
        for w in adj[x]:
            e = (x, w) if x < w else (w, x)
            if e in used:
                continue
            if w != u:
                counts[w] = counts.get(w, 0) + 1
                if counts[w] > cap:
                    return True
            if depth + 1 < max_len:
                used.add(e)
                stop = rec(w, depth + 1)
                used.discard(e)
                if stop:
                    return True
        return False

    rec(u, 0)
    return counts


def check_N_properties(g: SimpleGraph, *, max_degree: float, cycle_len: float,
                       trail_len: int = 6, trail_count: int = 3,
                       fully_exposed=None, which=("N1", "N2", "N3", "N4"),
                       cycle_limit: int = 100000) -> NReport:
    """Check the red-graph events used to stop the algorithm early.

    N1 maximum degree; N2 at least 2 neighbours for every vertex in
    ``fully_exposed`` (vertices with no white pair left, supplied by the
    caller); N3 no two cycles of length <= cycle_len sharing exactly one
    vertex; N4 at most ``trail_count`` trails of length <= trail_len between
    any two distinct vertices.
    """
    rep = NReport()
    deg = g.degree()
    if "N1" in which:
        v = int(np.argmax(deg)) if g.n else 0
        rep.results["N1"] = bool(g.n == 0 or deg.max() <= max_degree)
        if not rep.results["N1"]:
            rep.witnesses["N1"] = {"vertex": v, "degree": int(deg[v])}
    if "N2" in which:
        rep.results["N2"] = True
        if fully_exposed is not None:
            for v in sorted(int(x) for x in fully_exposed):
                if deg[v] < 2:
                    rep.results["N2"] = False
                    rep.witnesses["N2"] = {"vertex": v, "degree": int(deg[v])}
                    break
    adj = [g.neighbors(v).tolist() for v in range(g.n)]
    if "N3" in which:
        rep.results["N3"] = True
        L = int(np.floor(cycle_len))
        for v in range(g.n):
            cycles = list(dict.fromkeys(_short_cycles_through(adj, v, L, cycle_limit, False)))
            hit = None
            for a, b in itertools.combinations(cycles, 2):
                if a & b == {v}:
                    hit = (sorted(a), sorted(b))
                    break
            if hit:
                rep.results["N3"] = False
                rep.witnesses["N3"] = {"vertex": v, "cycles": hit}
                break
    if "N4" in which:
        rep.results["N4"] = True
        for u in range(g.n):
            counts = _trail_counts(adj, u, trail_len, trail_count)
            bad = [w for w, c in counts.items() if c > trail_count]
            if bad:
                rep.results["N4"] = False
                rep.witnesses["N4"] = {"pair": (u, min(bad)), "trails_over": trail_count}
                break
    return rep


# -- random instances ----------------------------------------------------------

def random_graph(n: int, p: float, rng: np.random.Generator) -> SimpleGraph:
    """G(n, p) built in memory (small n only)."""
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.shape[0]) < p
    return SimpleGraph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))


def random_graph_m(n: int, m: int, rng: np.random.Generator) -> SimpleGraph:
    """Uniform graph with exactly m edges."""
    iu, ju = np.triu_indices(n, 1)
    if m > iu.shape[0]:
        raise ParameterError(f"{m} edges do not fit on {n} vertices")
    pick = rng.choice(iu.shape[0], size=m, replace=False)
    return SimpleGraph.from_edges(n, np.stack([iu[pick], ju[pick]], axis=1))


def is_connected(g: SimpleGraph) -> bool:
    return g.n <= 1 or largest_component(g).shape[0] == g.n
