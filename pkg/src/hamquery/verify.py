"""Ground-truth checks: exact Hamiltonicity, certificates, brute-force boosters.

Exact routines carry hard size caps. Backtracking that runs out of time
reports ``None`` (unknown) instead of guessing.
"""

import json
import time
from dataclasses import asdict, dataclass, field

import numba as nb
import numpy as np

from .errors import ContractError, ParameterError
from .graphtools import SimpleGraph

DP_CAP = 24
BACKTRACK_CAP = 64
BOOSTER_CAP = 12
LOWER_BOUND_CAP = 16


@dataclass
class HamResult:
    hamiltonian: bool | None
    cycle: list | None = None
    method: str = ""

    def __bool__(self):
        if self.hamiltonian is None:
            raise ContractError("Hamiltonicity undecided (search timed out)")
        return self.hamiltonian


def _masks(g: SimpleGraph) -> np.ndarray:
    return np.array(g.adj_masks(), dtype=np.int64)


@nb.njit(cache=True)
def _ham_dp(adj, n):
    # dp[mask]: end vertices of paths from vertex 0 covering exactly mask
    size = 1 << n
    dp = np.zeros(size, dtype=np.int64)
    dp[1] = 1
    for mask in range(1, size):
        ends = dp[mask]
        if ends == 0 or (mask & 1) == 0:
            continue
        for v in range(n):
            if (ends >> v) & 1:
                nxt = adj[v] & ~mask
                while nxt:
                    low = nxt & -nxt
                    w = 0
                    while (low >> w) != 1:
                        w += 1
                    dp[mask | low] |= low
                    nxt ^= low
    full = size - 1
    end = -1
    for v in range(1, n):
        if (dp[full] >> v) & 1 and (adj[v] & 1):
            end = v
            break
    if end < 0:
        return np.zeros(0, dtype=np.int64)
    cyc = np.empty(n, dtype=np.int64)
    mask = full
    cur = end
    for i in range(n - 1, 0, -1):
        cyc[i] = cur
        prev_mask = mask ^ (1 << cur)
        for u in range(n):
            if (dp[prev_mask] >> u) & 1 and (adj[u] >> cur) & 1:
                mask = prev_mask
                cur = u
                break
    cyc[0] = 0
    return cyc


def _backtrack(adj: list[int], n: int, deadline: float):
    full = (1 << n) - 1
    path = [0]
    state = {"timed_out": False, "steps": 0}

    def feasible(visited, end):
        # every unvisited vertex needs two usable neighbours (endpoints count)
        free = full & ~visited
        open_ends = free | (1 << end) | 1
        x = free
        while x:
            low = x & -x
            v = low.bit_length() - 1
            x ^= low
            if bin(adj[v] & open_ends).count("1") < 2:
                return False
        return True

    def rec(visited, end):
        state["steps"] += 1
        if state["steps"] & 1023 == 0 and time.monotonic() > deadline:
            state["timed_out"] = True
            return False
        if visited == full:
            return bool(adj[end] & 1)
        if not feasible(visited, end):
            return False
        cand = adj[end] & ~visited
        order = []
        while cand:
            low = cand & -cand
            w = low.bit_length() - 1
            cand ^= low
            order.append((bin(adj[w] & ~visited).count("1"), w))
        order.sort()
        for _, w in order:
            path.append(w)
            if rec(visited | (1 << w), w):
                return True
            path.pop()
            if state["timed_out"]:
                return False
        return False

    found = rec(1, 0)
    if state["timed_out"]:
        return None, None
    return found, (list(path) if found else None)


def is_hamiltonian_exact(g: SimpleGraph, method: str = "auto", timeout: float = 10.0) -> HamResult:
    """Decide Hamiltonicity exactly.

    ``dp`` is the bitmask dynamic program (n <= 24), ``backtrack`` a pruned
    depth-first search (n <= 64) that returns unknown after ``timeout``
    seconds.
    """
    n = g.n
    if method == "auto":
        method = "dp" if n <= DP_CAP else "backtrack"
    if n < 3:
        return HamResult(False, None, method)
    if method == "dp":
        if n > DP_CAP:
            raise ParameterError(f"bitmask DP limited to n <= {DP_CAP}")
        cyc = _ham_dp(_masks(g), n)
        if cyc.size == 0:
            return HamResult(False, None, "dp")
        return HamResult(True, cyc.tolist(), "dp")
    if method == "backtrack":
        if n > BACKTRACK_CAP:
            raise ParameterError(f"backtracking limited to n <= {BACKTRACK_CAP}")
        if (g.degree() < 2).any():
            return HamResult(False, None, "backtrack")
        found, cyc = _backtrack(g.adj_masks(), n, time.monotonic() + timeout)
        return HamResult(found, cyc, "backtrack")
    raise ParameterError(f"unknown method {method!r}")


def is_hamilton_cycle(g: SimpleGraph, cycle) -> bool:
    cycle = list(cycle)
    if len(cycle) != g.n or sorted(cycle) != list(range(g.n)) or g.n < 3:
        return False
    return all(g.has_edge(cycle[i], cycle[(i + 1) % g.n]) for i in range(g.n))


# -- certificates --------------------------------------------------------------

@dataclass
class Certificate:
    cycle: list
    positives_by_phase: dict = field(default_factory=dict)
    strategy: str = "five-phase"

    def digest(self) -> str:
        import hashlib
        h = hashlib.sha256(np.asarray(self.cycle, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]


@dataclass
class Validation:
    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate_certificate(c: Certificate, o) -> Validation:
    """The cycle visits every vertex once and each of its pairs was
    answered positively by the oracle."""
    cyc = np.asarray(c.cycle, dtype=np.int64)
    n = o.n
    if n < 3:
        return Validation(False, "a Hamilton cycle needs n >= 3")
    if cyc.shape[0] != n:
        return Validation(False, f"cycle has {cyc.shape[0]} vertices, expected {n}")
    if not np.array_equal(np.sort(cyc), np.arange(n)):
        return Validation(False, "cycle does not visit every vertex exactly once")
    nxt = np.roll(cyc, -1)
    pos = o.answered_positive_many(cyc, nxt)
    if not pos.all():
        i = int(np.flatnonzero(~pos)[0])
        return Validation(False, f"pair ({int(cyc[i])}, {int(nxt[i])}) has no positive answer")
    return Validation(True)


def validate_tree(edges, o) -> Validation:
    n = o.n
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.shape[0] != n - 1:
        return Validation(False, f"{edges.shape[0]} edges, expected {n - 1}")
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges.tolist():
        ru, rv = find(u), find(v)
        if ru == rv:
            return Validation(False, f"edge ({u}, {v}) closes a cycle")
        parent[ru] = rv
    if edges.size and not o.answered_positive_many(edges[:, 0], edges[:, 1]).all():
        return Validation(False, "tree edge without positive answer")
    return Validation(True)


# -- boosters --------------------------------------------------------------

@nb.njit(cache=True)
def _path_ends(adj, n):
    # ends[mask]: vertices that end some path whose vertex set is exactly mask
    size = 1 << n
    ends = np.zeros(size, dtype=np.int64)
    for v in range(n):
        ends[1 << v] = 1 << v
    for mask in range(1, size):
        e = ends[mask]
        if e == 0:
            continue
        for v in range(n):
            if (e >> v) & 1:
                nxt = adj[v] & ~mask
                while nxt:
                    low = nxt & -nxt
                    ends[mask | low] |= low
                    nxt ^= low
    return ends


@nb.njit(cache=True)
def _longest_through(adj, n, x, y):
    """Most vertices on a path that uses the pair xy as an edge."""
    ends = _path_ends(adj, n)
    size = 1 << n
    best = np.full(size, -1, dtype=np.int64)
    for m in range(size):
        if (m >> y) & 1 and (ends[m] >> y) & 1 and not (m >> x) & 1:
            c = 0
            t = m
            while t:
                t &= t - 1
                c += 1
            best[m] = c
    for i in range(n):
        bit = 1 << i
        for m in range(size):
            if m & bit and best[m ^ bit] > best[m]:
                best[m] = best[m ^ bit]
    full = size - 1
    out = 0
    for m in range(size):
        if (m >> x) & 1 and (ends[m] >> x) & 1 and not (m >> y) & 1:
            rest = best[full & ~m]
            if rest > 0:
                c = 0
                t = m
                while t:
                    t &= t - 1
                    c += 1
                if c + rest > out:
                    out = c + rest
    return out


@nb.njit(cache=True)
def _ham_path_between(adj, n, x, y):
    size = 1 << n
    dp = np.zeros(size, dtype=np.int64)
    dp[1 << x] = 1 << x
    for mask in range(1, size):
        e = dp[mask]
        if e == 0:
            continue
        for v in range(n):
            if (e >> v) & 1:
                nxt = adj[v] & ~mask
                while nxt:
                    low = nxt & -nxt
                    dp[mask | low] |= low
                    nxt ^= low
    return (dp[size - 1] >> y) & 1 == 1


def _hc_through(adj, n, x, y) -> bool:
    # a Hamilton cycle using xy is a Hamilton path from x to y plus xy
    return n >= 3 and bool(_ham_path_between(adj, n, x, y))


def brute_force_boosters(h: SimpleGraph, e) -> set:
    """Exact e-boosters of h: non-edges f such that h + e + f has a path
    through e longer than any in h + e, or a Hamilton cycle through e."""
    n = h.n
    if n > BOOSTER_CAP:
        raise ParameterError(f"brute-force boosters limited to n <= {BOOSTER_CAP}")
    x, y = int(e[0]), int(e[1])
    if x == y:
        raise ParameterError("e must join two distinct vertices")
    base = _masks(h)
    base[x] |= 1 << y
    base[y] |= 1 << x
    if _hc_through(base, n, x, y):
        raise ContractError("h + e already has a Hamilton cycle through e")
    L0 = _longest_through(base, n, x, y)
    out = set()
    for a in range(n):
        for b in range(a + 1, n):
            if h.has_edge(a, b) or {a, b} == {x, y}:
                continue
            adj = base.copy()
            adj[a] |= 1 << b
            adj[b] |= 1 << a
            if _longest_through(adj, n, x, y) > L0 or _hc_through(adj, n, x, y):
                out.add((a, b))
    return out


def longest_path_through(h: SimpleGraph, e) -> int:
    """Vertex count of a longest path of h + e that uses e."""
    if h.n > BOOSTER_CAP:
        raise ParameterError(f"limited to n <= {BOOSTER_CAP}")
    adj = _masks(h)
    x, y = int(e[0]), int(e[1])
    adj[x] |= 1 << y
    adj[y] |= 1 << x
    return int(_longest_through(adj, h.n, x, y))


def satisfies_expansion(h: SimpleGraph, k: int) -> bool:
    """|N(X) \\ X| >= 2|X| + 2 for every nonempty X with |X| <= k (exhaustive)."""
    import itertools
    masks = h.adj_masks()
    for size in range(1, k + 1):
        for X in itertools.combinations(range(h.n), size):
            xm = 0
            nm = 0
            for v in X:
                xm |= 1 << v
                nm |= masks[v]
            if bin(nm & ~xm).count("1") < 2 * size + 2:
                return False
    return True


# -- lower-bound experiment ----------------------------------------------------

@dataclass
class LowerBoundReport:
    n: int
    k: int
    A: list
    NA: list
    closing_pairs: list
    contained: bool
    a: int
    degree_one: int
    isolated: int
    a_bound_applies: bool
    a_bound_ok: bool
    ratio: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def lower_bound_experiment(g: SimpleGraph) -> LowerBoundReport:
    """Locate every non-edge whose addition makes g Hamiltonian."""
    n = g.n
    if n > LOWER_BOUND_CAP:
        raise ParameterError(f"lower-bound experiment limited to n <= {LOWER_BOUND_CAP}")
    if is_hamiltonian_exact(g, "dp").hamiltonian:
        raise ParameterError("graph is already Hamiltonian")
    deg = g.degree()
    A = [v for v in range(n) if deg[v] != 2]
    NA = sorted({int(w) for v in A for w in g.neighbors(v)})
    region = set(A) | set(NA)
    adj = _masks(g)
    closing = []
    for a in range(n):
        for b in range(a + 1, n):
            if g.has_edge(a, b):
                continue
            adj2 = adj.copy()
            adj2[a] |= 1 << b
            adj2[b] |= 1 << a
            if _ham_dp(adj2, n).size:
                closing.append((a, b))
    k = g.m - n
    d1 = int((deg == 1).sum())
    iso = int((deg == 0).sum())
    applies = d1 <= 2 and iso == 0
    return LowerBoundReport(
        n=n, k=k, A=A, NA=NA, closing_pairs=closing,
        contained=all(a in region and b in region for a, b in closing),
        a=len(A), degree_one=d1, isolated=iso, a_bound_applies=applies,
        a_bound_ok=(len(A) <= 2 * k + 4) if applies else True,
        ratio=len(closing) / (max(k, 0) + 1) ** 2)


# -- empirical lemma checks ------------------------------------------------------

BIPARTITE_MIN = 10  # sides of at least 4 and 6


def _unbalanced_bipartite(rng: np.random.Generator, max_n: int) -> SimpleGraph:
    # sides a < b - 1 rule out a Hamilton cycle even after adding one pair
    if max_n < BIPARTITE_MIN:
        raise ParameterError(f"bipartite instances need at least {BIPARTITE_MIN} vertices")
    a = int(rng.integers(4, max_n // 2))
    b = int(rng.integers(a + 2, max_n - a + 1))
    edges = [(i, a + j) for i in range(a) for j in range(b) if rng.random() < 0.85]
    perm = rng.permutation(a + b)
    return SimpleGraph.from_edges(a + b, [(int(perm[u]), int(perm[v])) for u, v in edges])


def booster_check(trials: int, rng: np.random.Generator, sizes=(6, 12), k: int = 1,
                  hypothesis_trials: int = 0) -> dict:
    """Rotation boosters against brute force on random connected graphs.

    Instances meeting the expansion hypothesis for ``k`` are also checked
    for at least (k+1)^2/2 boosters. Random graphs that expand are nearly
    always Hamiltonian through e, so ``hypothesis_trials`` extra instances
    are drawn from unbalanced bipartite graphs.
    """
    from .graphtools import is_connected, random_graph
    from .phase5_boost import enumerate_boosters

    out = {"instances": 0, "violations": 0, "hypothesis_instances": 0,
           "hypothesis_failures": 0, "min_count": None}

    def record(h, e, brute):
        if satisfies_expansion(h, k):
            out["hypothesis_instances"] += 1
            if len(brute) < (k + 1) ** 2 / 2:
                out["hypothesis_failures"] += 1
            mc = out["min_count"]
            out["min_count"] = len(brute) if mc is None else min(mc, len(brute))

    while out["instances"] < trials:
        n = int(rng.integers(sizes[0], sizes[1] + 1))
        h = random_graph(n, float(rng.uniform(0.25, 0.6)), rng)
        if not is_connected(h):
            continue
        x, y = (int(v) for v in rng.choice(n, size=2, replace=False))
        try:
            brute = brute_force_boosters(h, (x, y))
        except ContractError:
            continue
        out["instances"] += 1
        out["violations"] += len(enumerate_boosters(h, (x, y)) - brute)
        record(h, (x, y), brute)
    done = 0
    while done < hypothesis_trials:
        h = _unbalanced_bipartite(rng, sizes[1])
        if not is_connected(h) or not satisfies_expansion(h, k):
            continue
        x, y = (int(v) for v in rng.choice(h.n, size=2, replace=False))
        brute = brute_force_boosters(h, (x, y))
        done += 1
        out["instances"] += 1
        out["violations"] += len(enumerate_boosters(h, (x, y)) - brute)
        record(h, (x, y), brute)
    return out


def pseudorandom_check(trials: int, n: int, k: int, rng: np.random.Generator,
                       samples: int = 200) -> dict:
    """Exact against sampled k-pseudorandomness on random graphs.

    Sampling can miss a witness but never invent one, so a contradiction is
    a sampled witness on a graph the exact check passes, or a witness that
    does not verify.
    """
    from .graphtools import is_k_pseudorandom, random_graph

    out = {"graphs": 0, "exact_true": 0, "sampled_true": 0, "contradictions": 0}
    for _ in range(trials):
        g = random_graph(n, float(rng.uniform(0.3, 0.8)), rng)
        ex = is_k_pseudorandom(g, k, "exact")
        sm = is_k_pseudorandom(g, k, "sampled", trials=samples, rng=rng)
        out["graphs"] += 1
        out["exact_true"] += int(ex.holds)
        out["sampled_true"] += int(sm.holds)
        for res in (ex, sm):
            if not res.holds:
                A, B = res.witness
                if set(A) & set(B) or any(g.has_edge(a, b) for a in A for b in B):
                    out["contradictions"] += 1
        if ex.holds and not sm.holds:
            out["contradictions"] += 1
    return out


def nprops_check(n: int, trials: int, rng: np.random.Generator, c: float = 10.0) -> dict:
    """Rates of the red-graph events N1-N4 on G(n, p) at the threshold."""
    import math

    from .graphtools import check_N_properties, random_graph

    ln = math.log(n)
    p = min(1.0, (ln + math.log(ln) + c) / n)
    counts = {"N1": 0, "N2": 0, "N3": 0, "N4": 0}
    for _ in range(trials):
        g = random_graph(n, p, rng)
        rep = check_N_properties(g, max_degree=40 * ln, cycle_len=ln ** 0.9,
                                 fully_exposed=range(n))
        for key, ok in rep.results.items():
            counts[key] += int(ok)
    return {"n": n, "p": p, "trials": trials, "passed": counts}


def _near_hamiltonian(n: int, k: int, rng: np.random.Generator) -> SimpleGraph:
    # a cycle on n - j vertices, the other j hung off it, then chords up to n + k edges
    j = int(rng.integers(1, 3))
    perm = rng.permutation(n).tolist()
    ring, rest = perm[:n - j], perm[n - j:]
    edges = {(min(a, b), max(a, b)) for a, b in zip(ring, ring[1:] + ring[:1])}
    for v in rest:
        u = int(rng.choice(ring + [w for w in rest if w != v]))
        edges.add((min(u, v), max(u, v)))
    while len(edges) < n + k:
        a, b = (int(x) for x in rng.choice(n, size=2, replace=False))
        edges.add((min(a, b), max(a, b)))
    return SimpleGraph.from_edges(n, sorted(edges))


def random_non_hamiltonian(n: int, k: int, rng: np.random.Generator,
                           tries: int = 1000) -> SimpleGraph:
    """A connected graph with n + k edges and no Hamilton cycle.

    Half the draws are uniform m-edge graphs, half a cycle with one or two
    vertices hanging off it plus random chords (rejection sampling).
    """
    from .graphtools import is_connected, random_graph_m

    for _ in range(tries):
        if rng.random() < 0.5:
            g = random_graph_m(n, n + k, rng)
        else:
            g = _near_hamiltonian(n, k, rng)
        if g.m != n + k or not is_connected(g):
            continue
        if not is_hamiltonian_exact(g, "dp").hamiltonian:
            return g
    raise ContractError(f"no non-Hamiltonian graph found in {tries} tries")


def lower_bound_batch(n: int, k: int, trials: int, rng: np.random.Generator) -> dict:
    out = {"n": n, "k": k, "trials": trials, "contained": 0, "a_bound_applies": 0,
           "a_bound_ok": 0, "max_closing": 0, "max_ratio": 0.0}
    for _ in range(trials):
        rep = lower_bound_experiment(random_non_hamiltonian(n, k, rng))
        out["contained"] += int(rep.contained)
        out["a_bound_applies"] += int(rep.a_bound_applies)
        out["a_bound_ok"] += int(rep.a_bound_applies and rep.a_bound_ok)
        out["max_closing"] = max(out["max_closing"], len(rep.closing_pairs))
        out["max_ratio"] = max(out["max_ratio"], rep.ratio)
    return out
