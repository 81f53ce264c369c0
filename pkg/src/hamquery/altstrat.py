"""The two simpler strategies: a spanning tree, and a Hamilton cycle built
from a long path plus a random k-in/k-out digraph.

The two-phase strategy exposes pairs at sub-probabilities q1 and q2 while
the oracle answers at p. ``SubExposure`` couples the two: every exposure is
a Bernoulli(q) event, independent of the others on the same pair, and the
union of the events on a pair is contained in the oracle's edge.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import min_weight_full_bipartite_matching

from ._hash import derive_key, pack_pair
from .errors import ContractError, ParameterError, StrategyFailure
from .oracle import Oracle
from .params import ParamSet
from .verify import Certificate

SALT_TWO_PHASE = 0x2F5A
SALT_DH = 0xD1C

V_P = -1  # label of the contracted path vertex


# -- spanning tree -------------------------------------------------------------

def spanning_tree_strategy(o: Oracle) -> list[tuple[int, int]]:
    """Grow a tree from vertex 0, each tree vertex querying the outside in a
    fixed order until it finds an edge. Exactly n-1 positives on success."""
    res = o.query_tree_scan()
    reached = int((res.parent >= 0).sum()) + 1
    if reached < o.n:
        raise StrategyFailure("tree", f"frontier exhausted with {reached} of {o.n} vertices")
    kids = np.flatnonzero(res.parent >= 0)
    return [(int(res.parent[c]), int(c)) for c in kids]


# -- coupled sub-probability exposures ----------------------------------------------

def solve_q2(p: float, q1: float, rounds: int = 4) -> float:
    """The q2 with 1 - p = (1 - q1)(1 - q2)^rounds."""
    if not (0.0 <= q1 <= p <= 1.0):
        raise ParameterError("need 0 <= q1 <= p <= 1")
    if p >= 1.0:
        return 1.0
    return 1.0 - ((1.0 - p) / (1.0 - q1)) ** (1.0 / rounds)


def q2_residual(p: float, q1: float, q2: float, rounds: int = 4) -> float:
    return abs((1.0 - p) - (1.0 - q1) * (1.0 - q2) ** rounds)


@dataclass
class _PairState:
    consumed: float = 0.0  # P(some earlier exposure was positive)
    settled: int = 0  # 0 unknown, 1 edge, -1 non-edge (after the physical query)
    used: dict = field(default_factory=dict)


class SubExposure:
    """Per-pair bookkeeping for exposures at probabilities below p.

    While a pair is unsettled its edge indicator, given that the exposures so
    far were negative, is Bernoulli((p - c)/(1 - c)) with c the consumed
    mass. An exposure at q queries the oracle with probability
    q(1 - c)/(p - c), which makes it positive with probability exactly q.
    After the physical query the pair is settled: a non-edge answers every
    later exposure negatively, an edge answers with a fresh Bernoulli(q) coin.
    """

    def __init__(self, o: Oracle, rng: np.random.Generator, budgets: dict):
        self.o = o
        self.rng = rng
        self.budgets = dict(budgets)
        self.pairs: dict = {}
        self.exposures = 0

    def expose(self, u: int, v: int, level: str, q: float) -> bool:
        key = pack_pair(u, v)
        st = self.pairs.get(key)
        if st is None:
            st = self.pairs[key] = _PairState()
        used = st.used.get(level, 0) + 1
        if used > self.budgets[level]:
            raise ContractError(f"pair ({u}, {v}) exposed {used} times at {level}")
        st.used[level] = used
        self.exposures += 1
        p = self.o.p
        c_next = 1.0 - (1.0 - st.consumed) * (1.0 - q)
        if c_next > p + 1e-12:
            raise ContractError(f"pair ({u}, {v}) would consume {c_next:.6g} > p")
        if st.settled == 1:
            hit = self.rng.random() < q
        elif st.settled == -1:
            hit = False
        else:
            room = p - st.consumed
            r = 1.0 if room <= 0 else min(1.0, q * (1.0 - st.consumed) / room)
            if self.rng.random() < r:
                hit = self.o.query(u, v)
                st.settled = 1 if hit else -1
            else:
                hit = False
        st.consumed = c_next
        return hit

    def max_use(self, level: str) -> int:
        return max((st.used.get(level, 0) for st in self.pairs.values()), default=0)


# -- k-in/k-out digraph and directed Hamiltonicity ---------------------------------

@dataclass
class KInOutDigraph:
    """Vertices are labels (graph vertices, or V_P for the contracted path).

    ``out[i]`` and ``inn[i]`` list local indices chosen by vertex i; the arc
    set is {i -> x : x in out[i]} together with {x -> i : x in inn[i]}.
    """

    labels: list
    out: list
    inn: list

    @property
    def size(self) -> int:
        return len(self.labels)

    def successors(self) -> list[set]:
        succ = [set() for _ in self.labels]
        for i, xs in enumerate(self.out):
            succ[i].update(xs)
        for i, xs in enumerate(self.inn):
            for x in xs:
                succ[x].add(i)
        for i in range(self.size):
            succ[i].discard(i)
        return succ

    @classmethod
    def random(cls, size: int, k: int, rng: np.random.Generator) -> "KInOutDigraph":
        """Each vertex picks k out- and k in-neighbours uniformly."""
        out, inn = [], []
        for i in range(size):
            others = np.delete(np.arange(size), i)
            out.append(sorted(rng.choice(others, size=min(k, size - 1), replace=False).tolist()))
            inn.append(sorted(rng.choice(others, size=min(k, size - 1), replace=False).tolist()))
        return cls(list(range(size)), out, inn)


def _reachable_all(succ, start, alive, target) -> bool:
    # every alive vertex is reachable from start inside alive, and target too
    seen = {start}
    stack = [start]
    while stack:
        a = stack.pop()
        for b in succ[a]:
            if b not in seen and (alive[b] or b == target):
                seen.add(b)
                stack.append(b)
    return all(seen.__contains__(v) for v in range(len(alive)) if alive[v]) and target in seen


def _exact_directed(succ, m, deadline) -> list | None:
    if m == 1:
        return [0]
    pred = [set() for _ in range(m)]
    for a in range(m):
        for b in succ[a]:
            pred[b].add(a)
    if any(not succ[v] or not pred[v] for v in range(m)):
        return None
    alive = [True] * m
    alive[0] = False
    path = [0]

    def rec() -> bool:
        if time.monotonic() > deadline:
            raise TimeoutError
        a = path[-1]
        if len(path) == m:
            return 0 in succ[a]
        if not _reachable_all(succ, a, alive, 0):
            return False
        for b in sorted(succ[a], key=lambda b: len(succ[b])):
            if not alive[b]:
                continue
            alive[b] = False
            path.append(b)
            if rec():
                return True
            path.pop()
            alive[b] = True
        return False

    return list(path) if rec() else None


def _cycle_cover(succ, m, rng) -> list[int] | None:
    """Successor array of a random cycle cover, or None if none exists."""
    rows = [a for a in range(m) for _ in succ[a]]
    cols = [b for a in range(m) for b in succ[a]]
    w = 1.0 + rng.random(len(rows))
    try:
        _, match = min_weight_full_bipartite_matching(
            sparse.csr_matrix((w, (rows, cols)), shape=(m, m)))
    except ValueError:
        return None
    return match.tolist()


def _patch(succ, nxt, rng) -> bool:
    """Merge the cycles of a cover by 2-exchanges until one is left."""
    m = len(nxt)
    prev = [0] * m
    for a in range(m):
        prev[nxt[a]] = a
    while True:
        cid = [-1] * m
        ncyc = 0
        for s in range(m):
            if cid[s] >= 0:
                continue
            v = s
            while cid[v] < 0:
                cid[v] = ncyc
                v = nxt[v]
            ncyc += 1
        if ncyc == 1:
            return True
        merged = False
        # a -> nxt[a] and b -> nxt[b] on different cycles become a -> nxt[b], b -> nxt[a]
        for a in rng.permutation(m).tolist():
            for b_next in succ[a]:
                if cid[b_next] == cid[a]:
                    continue
                b = prev[b_next]
                if nxt[a] in succ[b]:
                    a_next = nxt[a]
                    nxt[a], nxt[b] = b_next, a_next
                    prev[b_next], prev[a_next] = a, b
                    merged = True
                    break
            if merged:
                break
        if not merged:
            return False


def solve_directed_hamilton(d: KInOutDigraph, *, exact_cap: int = 30, restarts: int = 40,
                            seed: int = 0, size_cap: int = 20000,
                            timeout: float = 30.0) -> list:
    """Directed Hamilton cycle as a list of local indices.

    Exact backtracking up to ``exact_cap`` vertices; above that, random
    cycle covers patched into one cycle, with restarts.
    """
    m = d.size
    if m > size_cap:
        raise ParameterError(f"digraph of {m} vertices above cap {size_cap}")
    succ = d.successors()
    if m <= exact_cap:
        try:
            cyc = _exact_directed(succ, m, time.monotonic() + timeout)
        except TimeoutError:
            raise StrategyFailure("directed", "exact search timed out") from None
        if cyc is None:
            raise StrategyFailure("directed", "no directed Hamilton cycle")
        return cyc
    if any(not s for s in succ):
        raise StrategyFailure("directed", "vertex without out-arcs")
    rng = np.random.default_rng(derive_key(seed, SALT_DH))
    for _ in range(restarts):
        nxt = _cycle_cover(succ, m, rng)
        if nxt is None:
            raise StrategyFailure("directed", "no cycle cover")
        if _patch(succ, nxt, rng):
            cyc = [0]
            while len(cyc) < m:
                cyc.append(nxt[cyc[-1]])
            return cyc
    raise StrategyFailure("directed", f"patching failed after {restarts} restarts")


# -- two-phase strategy --------------------------------------------------------------

@dataclass
class TwoPhasePlan:
    f: float
    eps: float
    q1: float
    q2: float
    m: int
    t: int
    k: int


def plan_two_phase(n: int, p: float, params: ParamSet) -> TwoPhasePlan:
    """Sub-probabilities and path length for p = f ln n / n."""
    if n < 4:
        raise ParameterError("two-phase strategy needs n >= 4")
    f = p * n / math.log(n)
    if f <= 1.0:
        raise ParameterError(f"p too small for the two-phase strategy (f={f:.3g})")
    eps = min(1.0, f ** -params.eps_exp)
    q1 = (1.0 - eps) * p
    q2 = solve_q2(p, q1)
    m = int(round(params.m_factor * n / math.sqrt(f)))
    m = max(2, min(n - 2, m))
    return TwoPhasePlan(f, eps, q1, q2, m, n - m, int(params.inout_k))


def _extend_path(o: Oracle, ex: SubExposure, rng, q1: float, t: int) -> list[int]:
    n = o.n
    off = np.ones(n, dtype=bool)
    path = [0]
    off[0] = False
    while len(path) - 1 < t:
        v = path[-1]
        nxt = None
        for u in rng.permutation(np.flatnonzero(off)).tolist():
            if ex.expose(v, u, "q1", q1):
                nxt = u
                break
        if nxt is None:
            raise StrategyFailure("phase1", f"dead end at path length {len(path) - 1}")
        path.append(nxt)
        off[nxt] = False
    return path


def _pick(ex: SubExposure, rng, v: int, ground: list, k: int, q2: float, side: str) -> list:
    hits = []
    for u in rng.permutation(len(ground)).tolist():
        if ex.expose(v, ground[u], "q2", q2):
            hits.append(ground[u])
            if len(hits) == k:
                return hits
    raise StrategyFailure("phase2", f"{side} list of {v} gave {len(hits)} < {k} successes")


def build_inout(o: Oracle, ex: SubExposure, rng, path: list, k: int, q2: float) -> KInOutDigraph:
    v0, vt = path[0], path[-1]
    on = np.zeros(o.n, dtype=bool)
    on[path] = True
    rest = np.flatnonzero(~on).tolist()
    labels = rest + [V_P]
    loc = {v: i for i, v in enumerate(rest)}
    ip = len(rest)
    out, inn = [], []
    for v in rest:
        others = [u for u in rest if u != v]
        xo = _pick(ex, rng, v, others + [v0], k, q2, "out")
        xi = _pick(ex, rng, v, others + [vt], k, q2, "in")
        out.append(sorted(ip if x == v0 else loc[x] for x in xo))
        inn.append(sorted(ip if x == vt else loc[x] for x in xi))
    out.append(sorted(loc[x] for x in _pick(ex, rng, vt, rest, k, q2, "out")))
    inn.append(sorted(loc[x] for x in _pick(ex, rng, v0, rest, k, q2, "in")))
    return KInOutDigraph(labels, out, inn)


def expand_cycle(d: KInOutDigraph, cyc: list, path: list) -> list[int]:
    """Replace the contracted vertex by the path (entered at v0, left at vt)."""
    ip = d.labels.index(V_P)
    i = cyc.index(ip)
    rot = cyc[i + 1:] + cyc[:i]
    return list(path) + [d.labels[j] for j in rot]


def two_phase_strategy(o: Oracle, params: ParamSet, alg_seed: int = 0) -> Certificate:
    """Long path at q1, then a k-in/k-out digraph at q2 closed into a cycle."""
    plan = plan_two_phase(o.n, o.p, params)
    rng = np.random.default_rng(derive_key(alg_seed, SALT_TWO_PHASE))
    ex = SubExposure(o, rng, {"q1": 1, "q2": 4})
    start = o.stats().positives
    if plan.q2 >= 1.0:
        # p = 1: every pair is an edge, so a Hamilton path closes directly
        path = _extend_path(o, ex, rng, plan.q1, o.n - 1)
        if not o.query(path[-1], path[0]):
            raise ContractError("closing pair answered negatively at p = 1")
        return Certificate(path, {"phase1": o.stats().positives - start, "phase2": 0},
                           "two-phase")
    path = _extend_path(o, ex, rng, plan.q1, plan.t)
    mid = o.stats().positives
    d = build_inout(o, ex, rng, path, plan.k, plan.q2)
    cyc = solve_directed_hamilton(d, exact_cap=params.dh_exact_cap,
                                  restarts=params.dh_restarts, seed=alg_seed)
    cycle = expand_cycle(d, cyc, path)
    if ex.max_use("q1") > 1 or ex.max_use("q2") > 4:
        raise ContractError("exposure budget exceeded")
    end = o.stats().positives
    return Certificate(cycle, {"phase1": mid - start, "phase2": end - mid}, "two-phase")
