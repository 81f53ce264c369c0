"""Phase V: close the cycle over the remaining expander vertices.

The red graph H on EXP3 is first made connected (one red edge between
consecutive components). Two adjacent cycle vertices v, w get red ports
x, y in EXP3, and the e-booster loop then looks for a red Hamilton path of
H from x to y, i.e. a Hamilton cycle of H + e through e = xy.

The booster loop keeps a path through e that can only be extended by
rotations (Posa rotations with e pinned). Endpoint pairs reachable by
rotations close the path into a cycle on its vertex set if joined; when
H is connected such a cycle extends to a longer path through e, so every
closing pair that is not already an edge is an e-booster. White boosters are
recoloured in generation order until one turns red.
"""

from dataclasses import dataclass, field

import numba as nb
import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import ContractError, ParameterError, PhaseFailure
from .graphtools import SimpleGraph
from .params import ParamSet
from .phase3_tiny import PhaseContext
from .tricolor import ColorState, EdgeColor

EXACT_LIMIT = 20


# -- rotation engine ------------------------------------------------------------

def _apply(p: int, pivots, L: int) -> int:
    # position of a base-path entry after the tail rotations in ``pivots``
    for i in pivots:
        if p > i:
            p = L + i - p
    return p


def _entry(t: int, pivots, L: int) -> int:
    # base-path index of the entry sitting at position t after the rotations
    for i in reversed(pivots):
        if t > i:
            t = L + i - t
    return t


def materialize(path: list, pivots) -> list:
    out = list(path)
    for i in pivots:
        out[i + 1:] = out[i + 1:][::-1]
    return out


@dataclass
class RotationNode:
    end: int
    pivots: tuple


class RotationEngine:
    """Longest-path search through a pinned edge e by extension and rotation.

    Vertices are 0..m-1 with adjacency lists ``adj``; ``nbrset`` mirrors them
    as sets. The pinned pair e need not be an edge of the graph.
    """

    def __init__(self, adj: list, e: tuple, rotation_cap: int = 4000):
        self.m = len(adj)
        self.adj = adj
        self.nbrset = [set(a) for a in adj]
        x, y = e
        if x == y or not (0 <= x < self.m and 0 <= y < self.m):
            raise ParameterError(f"bad pinned pair {e}")
        self.e = (min(x, y), max(x, y))
        self.cap = int(rotation_cap)
        self.path = [x, y]
        self.pos = [-1] * self.m
        self.pos[x], self.pos[y] = 0, 1

    # -- helpers ------------------------------------------------------------------
    def is_e(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) == self.e

    def is_edge(self, a: int, b: int) -> bool:
        return b in self.nbrset[a] or self.is_e(a, b)

    def add_edge(self, a: int, b: int) -> None:
        if b not in self.nbrset[a]:
            self.nbrset[a].add(b)
            self.nbrset[b].add(a)
            self.adj[a].append(b)
            self.adj[b].append(a)

    def set_path(self, path: list) -> None:
        for v in self.path:
            self.pos[v] = -1
        self.path = list(path)
        for i, v in enumerate(self.path):
            self.pos[v] = i

    def reverse(self) -> None:
        self.path.reverse()
        L = len(self.path)
        for i, v in enumerate(self.path):
            self.pos[v] = i
        assert L == len(self.path)

    def _free_neighbour(self, v: int):
        for w in self.adj[v]:
            if self.pos[w] < 0:
                return w
        return None

    def _extend_tail(self) -> bool:
        grew = False
        while True:
            w = self._free_neighbour(self.path[-1])
            if w is None:
                return grew
            self.pos[w] = len(self.path)
            self.path.append(w)
            grew = True

    def tail_rotations(self, path: list, pos, goal=None, cap=None):
        """Breadth-first tail rotations of ``path`` with its head fixed.

        Returns (nodes, hit) where nodes are RotationNodes in discovery order
        and hit the index of the first node whose end satisfies goal.
        """
        cap = self.cap if cap is None else cap
        L = len(path)
        nodes = [RotationNode(path[-1], ())]
        seen = {path[-1]}
        qi = 0
        while qi < len(nodes) and len(nodes) < cap:
            node = nodes[qi]
            qi += 1
            end, piv = node.end, node.pivots
            for z in self.adj[end]:
                pz = pos[z]
                if pz < 0:
                    continue
                t = _apply(pz, piv, L)
                if t >= L - 2:
                    continue
                v = path[_entry(t + 1, piv, L)]
                if self.is_e(z, v) or v in seen:
                    continue
                seen.add(v)
                nodes.append(RotationNode(v, piv + (t,)))
                if goal is not None and goal(v):
                    return nodes, len(nodes) - 1
                if len(nodes) >= cap:
                    break
        return nodes, None

    def grow(self) -> None:
        """Extend greedily, rotating an end whenever both ends are stuck."""
        while True:
            self._extend_tail()
            if self._free_neighbour(self.path[0]) is not None:
                self.reverse()
                continue
            goal = lambda v: self._free_neighbour(v) is not None  # noqa: E731
            moved = False
            for _ in range(2):
                nodes, hit = self.tail_rotations(self.path, self.pos, goal)
                if hit is not None:
                    self.set_path(materialize(self.path, nodes[hit].pivots))
                    moved = True
                    break
                self.reverse()
            if not moved:
                return

    def closing_pairs(self, outer_cap=None, inner_cap=None):
        """Yield (a, b, realise) for endpoint pairs reachable by rotations.

        ``realise()`` returns the rotated path, running from b to a.
        """
        path = list(self.path)
        L = len(path)
        outer, _ = self.tail_rotations(path, self.pos, cap=outer_cap)
        pos = [-1] * self.m
        for node in outer:
            pb = materialize(path, node.pivots)
            rev = pb[::-1]
            for i, v in enumerate(rev):
                pos[v] = i
            inner, _ = self.tail_rotations(rev, pos, cap=inner_cap)
            for sub in inner:
                a = sub.end
                yield a, node.end, (lambda rev=rev, piv=sub.pivots: materialize(rev, piv))
            for v in rev:
                pos[v] = -1
        assert L == len(self.path)


def open_cycle_at_e(cycle: list, e: tuple) -> list:
    """Cut a cycle at the pair e; returns the path from e[0] to e[1]."""
    x, y = e
    L = len(cycle)
    i = cycle.index(x)
    if cycle[(i + 1) % L] == y:
        return [cycle[(i - k) % L] for k in range(L)]
    if cycle[(i - 1) % L] == y:
        return [cycle[(i + k) % L] for k in range(L)]
    raise ContractError("pinned pair is not consecutive on the cycle")


# -- exact longest path through e (small graphs) ----------------------------------

@nb.njit(cache=True)
def _anchored_paths(adjm, m, start, avoid):
    # ends[mask]: bitset of end vertices of simple paths from start covering mask
    ends = np.zeros(1 << m, dtype=np.int64)
    ends[1 << start] = 1 << start
    for mask in range(1 << m):
        em = ends[mask]
        if em == 0:
            continue
        for v in range(m):
            if (em >> v) & 1:
                nb_ = adjm[v] & ~mask
                if avoid >= 0:
                    nb_ &= ~(1 << avoid)
                while nb_:
                    w = nb_ & -nb_
                    ends[mask | w] |= w
                    nb_ ^= w
    return ends


@nb.njit(cache=True)
def _best_split(from_x, from_y, m, y):
    # disjoint (A, B), A from x and B from y, maximising |A| + |B|
    full = (1 << m) - 1
    best = -1
    bA = 0
    bB = 0
    for A in range(1 << m):
        if from_x[A] == 0:
            continue
        rest = full & ~A
        B = rest
        while True:
            if (B >> y) & 1 and from_y[B] != 0:
                size = 0
                z = A | B
                while z:
                    z &= z - 1
                    size += 1
                if size > best:
                    best = size
                    bA = A
                    bB = B
            if B == 0:
                break
            B = (B - 1) & rest
    return bA, bB


def _walk_back(ends, adjm, mask, end, start):
    path = [end]
    while mask != (1 << start):
        prev = mask & ~(1 << end)
        cands = int(ends[prev]) & int(adjm[end])
        nxt = (cands & -cands).bit_length() - 1
        path.append(nxt)
        mask, end = prev, nxt
    return path[::-1]


def exact_longest_through(adj: list, e: tuple) -> tuple[list, bool]:
    """Longest simple path containing e as an edge in (adj + e), and whether a
    Hamilton path from e[0] to e[1] exists in adj (a Hamilton cycle through e).
    """
    m = len(adj)
    if m > EXACT_LIMIT:
        raise ParameterError(f"exact search capped at {EXACT_LIMIT} vertices")
    x, y = e
    adjm = np.zeros(m, dtype=np.int64)
    for v, nb_ in enumerate(adj):
        for w in nb_:
            adjm[v] |= 1 << w
    from_x = _anchored_paths(adjm, m, x, y)
    from_y = _anchored_paths(adjm, m, y, x)
    full = (1 << m) - 1
    hc = bool(m >= 3 and _anchored_paths(adjm, m, x, -1)[full] >> y & 1) or \
        (m == 2 and bool(adjm[x] >> y & 1))
    A, B = (int(t) for t in _best_split(from_x, from_y, m, y))
    ea = int(from_x[A])
    eb = int(from_y[B])
    end_a = (ea & -ea).bit_length() - 1
    end_b = (eb & -eb).bit_length() - 1
    left = _walk_back(from_x, adjm, A, end_a, x)
    right = _walk_back(from_y, adjm, B, end_b, y)
    return left[::-1] + right, hc


# -- boosters -----------------------------------------------------------------

def _adjacency(h: SimpleGraph) -> list:
    return [sorted(h.neighbors(v).tolist()) for v in range(h.n)]


def enumerate_boosters(h: SimpleGraph, e: tuple, rotation_cap: int = 4000,
                       exact_cap: int = 12) -> set:
    """Sound e-boosters of h produced by rotations from a longest path through e."""
    adj = _adjacency(h)
    m = h.n
    if m < 3:
        raise ParameterError("need at least three vertices")
    eng = RotationEngine(adj, e, rotation_cap)
    if m <= exact_cap:
        path, hc = exact_longest_through(adj, eng.e)
        if hc:
            raise ContractError("h + e already has a Hamilton cycle through e")
        eng.set_path(path)
    else:
        eng.grow()
    out = set()
    for a, b, _ in eng.closing_pairs():
        if a == b or eng.is_e(a, b):
            continue
        if b in eng.nbrset[a]:
            if len(eng.path) == m:
                raise ContractError("h + e already has a Hamilton cycle through e")
            continue
        out.add((min(a, b), max(a, b)))
    return out


@dataclass
class BoosterStats:
    rounds: int = 0
    recoloured: int = 0
    free_closures: int = 0
    lengths: list = field(default_factory=list)


def booster_loop(s: ColorState, verts, e: tuple, params: ParamSet,
                 stats: BoosterStats | None = None) -> list:
    """Red Hamilton path on ``verts`` from e[0] to e[1] (global ids)."""
    verts = [int(v) for v in verts]
    m = len(verts)
    stats = BoosterStats() if stats is None else stats
    lid = {v: i for i, v in enumerate(verts)}
    x, y = lid[e[0]], lid[e[1]]
    if m == 2:
        if e[1] not in s.red_adj[e[0]]:
            raise PhaseFailure(5, "pair_not_red")
        return [e[0], e[1]]
    adj = [sorted(lid[w] for w in s.red_adj[v] if w in lid) for v in verts]
    eng = RotationEngine(adj, (x, y), params.rotation_cap)
    best = 0
    while True:
        if m <= params.exact_cap:
            path, hc = exact_longest_through(eng.adj, (x, y))
            if hc:
                cyc = _exact_cycle(eng.adj, x, y)
                return [verts[v] for v in cyc]
            eng.set_path(path)
        else:
            eng.grow()
        L = len(eng.path)
        if L <= best:
            raise ContractError("booster round did not lengthen the path")
        best = L
        stats.lengths.append(L)
        cycle = _close_once(s, eng, verts, params, stats)
        if cycle is None:
            raise PhaseFailure(5, "boosters_exhausted", f"path length {L} of {m}")
        if len(cycle) == m:
            return [verts[v] for v in open_cycle_at_e(cycle, (x, y))]
        _break_and_extend(eng, cycle)
        if stats.rounds > params.booster_round_cap:
            raise PhaseFailure(5, "round_cap")


def _exact_cycle(adj, x, y):
    # Hamilton path x -> y in adj, recovered from the anchored table
    m = len(adj)
    adjm = np.zeros(m, dtype=np.int64)
    for v, nb_ in enumerate(adj):
        for w in nb_:
            adjm[v] |= 1 << w
    ends = _anchored_paths(adjm, m, x, -1)
    return _walk_back(ends, adjm, (1 << m) - 1, y, x)


def _close_once(s: ColorState, eng: RotationEngine, verts, params, stats):
    """Find a closing pair that is red (already, or after recolouring).

    Returns the closed cycle (local ids) or None when no white closing pair
    turns red.
    """
    stats.rounds += 1
    batch_a, batch_b, batch_r = [], [], []

    def flush():
        if not batch_a:
            return None
        cols = s.colors([verts[a] for a in batch_a], [verts[b] for b in batch_b])
        for a, b, real, c in zip(batch_a, batch_b, batch_r, cols.tolist()):
            if c == EdgeColor.RED:
                eng.add_edge(a, b)
                stats.free_closures += 1
                return real()
            if c != EdgeColor.WHITE:
                continue
            got = s.recolour(verts[a], verts[b])
            stats.recoloured += 1
            if got == EdgeColor.RED:
                eng.add_edge(a, b)
                return real()
        batch_a.clear()
        batch_b.clear()
        batch_r.clear()
        return None

    seen = set()
    for a, b, real in eng.closing_pairs():
        if a == b or eng.is_e(a, b):
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        if b in eng.nbrset[a]:
            stats.free_closures += 1
            return real()
        batch_a.append(a)
        batch_b.append(b)
        batch_r.append(real)
        if len(batch_a) >= 256:
            got = flush()
            if got is not None:
                return got
    return flush()


def _break_and_extend(eng: RotationEngine, cycle: list) -> None:
    """Open a non-spanning cycle next to an outside neighbour and extend."""
    L = len(cycle)
    on = set(cycle)
    idx = {v: i for i, v in enumerate(cycle)}
    for w in range(eng.m):
        if w in on:
            continue
        for c in eng.adj[w]:
            if c in on:
                i = idx[c]
                for step in (1, -1):
                    d = cycle[(i + step) % L]
                    if not eng.is_e(c, d):
                        # path d ... c (going away from d), then w
                        path = [cycle[(i + step * (k + 1)) % L] for k in range(L)]
                        eng.set_path(path + [w])
                        return
    raise PhaseFailure(5, "disconnected", "no outside vertex touches the cycle")


# -- phase driver ----------------------------------------------------------------

def top_up_degrees(s: ColorState, exp3, params: ParamSet) -> int:
    """Give every vertex of EXP3 at least ``boost_min_degree`` red neighbours
    inside EXP3, recolouring its white pairs there in a random order.

    Rotations cannot start at a leaf, so at small n this runs before the
    booster routine. Returns the number of red edges added.
    """
    d = int(params.boost_min_degree)
    exp3 = np.sort(np.asarray(exp3, dtype=np.int64))
    if d <= 0 or exp3.shape[0] <= d:
        return 0
    mask = np.zeros(s.n, dtype=bool)
    mask[exp3] = True
    rng = np.random.default_rng(s.new_key())
    added = 0
    for v in exp3.tolist():
        have = s.red_degree(v, within=mask)
        if have >= d:
            continue
        cols = rng.permutation(exp3[exp3 != v])
        while have < d:
            res = s.recolour_block(np.array([v], dtype=np.int64), cols, stop_after_red=True,
                                   label="phase5-topup")
            if res.positives == 0:
                break
            have += 1
            added += 1
    return added


def connect_components(s: ColorState, exp3, params: ParamSet) -> int:
    exp3 = np.sort(np.asarray(exp3, dtype=np.int64))
    if exp3.shape[0] <= 1:
        return 0
    mask = np.zeros(s.n, dtype=bool)
    mask[exp3] = True
    A = s.red_csr(within=mask)[exp3][:, exp3]
    ncomp, lab = connected_components(A, directed=False)
    if ncomp > params.component_cap:
        raise PhaseFailure(5, "components", f"{ncomp} > {params.component_cap}")
    comps = [exp3[lab == c] for c in range(ncomp)]
    comps.sort(key=lambda c: int(c[0]))
    added = 0
    if params.connect_mode == "chain":
        for c1, c2 in zip(comps[:-1], comps[1:]):
            res = s.recolour_block(c1, c2, stop_after_red=True, label="phase5-connect")
            if res.positives == 0:
                raise PhaseFailure(5, "connect", "no red edge between consecutive components")
            added += 1
    elif params.connect_mode == "giant":
        comps.sort(key=lambda c: (-c.shape[0], int(c[0])))
        joined = comps[0]
        for c in comps[1:]:
            res = s.recolour_block(c, joined, stop_after_red=True, label="phase5-connect")
            if res.positives == 0:
                raise PhaseFailure(5, "connect", "component cannot reach the rest")
            joined = np.sort(np.concatenate([joined, c]))
            added += 1
    else:
        raise ParameterError(f"unknown connect_mode {params.connect_mode!r}")
    return added


def attach_ports(s: ColorState, ctx: PhaseContext, exp3, params: ParamSet):
    """Adjacent cycle vertices v, w with red ports x in A_v, y in A_w.

    Cycle edges are tried in order; an edge whose ends have too few white
    pairs to EXP3 is skipped, and so is one whose port scan comes back
    empty (at most ``port_attempts`` scans).
    """
    exp3 = np.sort(np.asarray(exp3, dtype=np.int64))
    if exp3.shape[0] < 2:
        raise PhaseFailure(5, "exp_too_small", f"|EXP3|={exp3.shape[0]}")
    A_v, A_w = exp3[0::2], exp3[1::2]
    need = params.port_deg_factor * exp3.shape[0]
    order = ctx.cycle.order
    L = len(order)
    cache: dict = {}
    tries = 0

    def ok(u):
        if u not in cache:
            cache[u] = s.white_degree(u, exp3) >= need
        return cache[u]

    for i in range(L):
        v, w = order[i], order[(i + 1) % L]
        if not (ok(v) and ok(w)):
            continue
        tries += 1
        x = s.first_red(v, A_v, label="phase5-port")
        y = s.first_red(w, A_w, label="phase5-port") if x is not None else None
        if x is not None and y is not None:
            return v, w, x, y
        if tries >= params.port_attempts:
            break
    raise PhaseFailure(5, "ports", f"no port pair after {tries} scans")


def assemble_hamilton(ctx: PhaseContext, v: int, w: int, x: int, y: int, path: list) -> list:
    cyc = ctx.cycle
    if cyc.succ(v) != w:
        raise ContractError("v, w are not consecutive on the cycle")
    return cyc.arc(w, v) + list(path)


def run_phase5(ctx: PhaseContext) -> list:
    s, params = ctx.s, ctx.params
    start = s.oracle.stats()
    exp3 = np.flatnonzero(ctx.exp)
    tel = {"EXP3": int(exp3.shape[0])}
    ctx.telemetry["phase5"] = tel
    if exp3.shape[0] == 0:
        tel["positives"] = 0
        return list(ctx.cycle.order)
    tel["topup_edges"] = top_up_degrees(s, exp3, params)
    tel["connect_edges"] = connect_components(s, exp3, params)
    v, w, x, y = attach_ports(s, ctx, exp3, params)
    stats = BoosterStats()
    path = booster_loop(s, exp3.tolist(), (x, y), params, stats)
    tel.update({"rounds": stats.rounds, "boost_queries": stats.recoloured,
                "free_closures": stats.free_closures})
    cycle = assemble_hamilton(ctx, v, w, x, y, path)
    tel["positives"] = s.oracle.stats().positives - start.positives
    return cycle
