"""Phase III: absorb the TINY vertices into the cycle.

Each TINY vertex x is spliced in with two red anchors. The cycle is opened
into a red path Q through x, both ends of Q are rotated once so that the new
ends have red neighbours in an expander core S of the still unused vertices,
and a shortest red path inside S closes the cycle again.

The same context object is carried through Phases IV and V.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .cycle import RedCycle, audit_red_cycle
from .errors import ContractError, PhaseFailure
from .graphtools import SimpleGraph, diameter_within, largest_component, shortest_red_path
from .params import ParamSet
from .phase2_partition import Blocks, PartitionOut
from .tricolor import ColorState

DIAM_EXACT_LIMIT = 3000


@dataclass
class AnchorCase:
    tag: str
    z1: int
    z2: int


@dataclass
class PhaseContext:
    s: ColorState
    params: ParamSet
    cycle: RedCycle
    c1_order: list
    c1_mask: np.ndarray
    u_mask: np.ndarray
    exp: np.ndarray
    small: list
    tiny: list
    blocks: Blocks
    J: set
    red_u: SimpleGraph
    audit: bool = False
    telemetry: dict = field(default_factory=dict)

    @classmethod
    def from_partition(cls, s: ColorState, params: ParamSet, cycle_order, part: PartitionOut,
                       audit: bool = False) -> "PhaseContext":
        n = s.n
        c1_mask = np.zeros(n, dtype=bool)
        c1_mask[np.asarray(cycle_order, dtype=np.int64)] = True
        u_mask = np.zeros(n, dtype=bool)
        u_mask[part.U] = True
        exp = np.zeros(n, dtype=bool)
        exp[part.EXP1] = True
        # red graph inside U; edges added later inside U always touch the
        # cycle, so degrees within EXP computed from it stay exact
        red_u = SimpleGraph.from_csr(s.red_csr(within=u_mask))
        return cls(s, params, RedCycle(n, cycle_order), list(cycle_order), c1_mask, u_mask,
                   exp, sorted(part.SMALL.tolist()), sorted(part.TINY.tolist()), part.blocks,
                   set(range(1, part.blocks.count + 1)), red_u, audit)

    # -- blocks -----------------------------------------------------------------
    def block_members(self, j: int) -> list:
        return self.blocks.members(j, self.c1_order)

    def block_is_arc(self, j: int) -> bool:
        pos = self.cycle.pos[np.asarray(self.block_members(j), dtype=np.int64)]
        if (pos < 0).any():
            return False
        L = len(self.cycle)
        d = np.diff(pos) % L
        return bool((d == 1).all() or (d == L - 1).all())

    def inner_surviving(self) -> np.ndarray:
        """Inner vertices of the blocks still indexed by J."""
        keep = np.zeros(self.blocks.count + 1, dtype=bool)
        keep[list(self.J)] = True
        return self.blocks.inner & keep[self.blocks.of]

    def drop_blocks(self, removed_edges, extra=()) -> None:
        of = self.blocks.of
        for a, b in removed_edges:
            if of[a] != 0 and of[a] == of[b]:
                self.J.discard(int(of[a]))
        for v in extra:
            self.J.discard(int(of[v]))

    # -- expander core -----------------------------------------------------------
    def good_set(self, threshold: float, exclude=()) -> np.ndarray:
        """EXP minus low-degree vertices (BAD) and their red neighbours."""
        A = self.red_u.to_csr()
        d = A @ self.exp.astype(np.int32)
        bad = self.exp & (d < threshold)
        near = (A @ bad.astype(np.int32)) > 0
        good = self.exp & ~bad & ~near
        for v in exclude:
            good[v] = False
        return good

    def check_step(self, before: set, expected_new: set, phase: int) -> None:
        """Audit the current cycle after a splice (only with ``audit``)."""
        if not self.audit:
            return
        why = audit_red_cycle(self.s, self.cycle.order)
        if why is None and set(self.cycle.order) != before | expected_new:
            why = "vertex set changed unexpectedly"
        if why is None:
            for j in self.J:
                if not self.block_is_arc(j):
                    why = f"block {j} is no longer an arc"
                    break
        if why is not None:
            raise ContractError(f"phase {phase} splice audit: {why}")


def select_expander_core(g: SimpleGraph, good, params: ParamSet, phase: int = 3) -> np.ndarray:
    """Largest component of the core_degree-core of g[good], size and diameter checked."""
    good = np.asarray(good)
    if good.dtype != bool:
        m = np.zeros(g.n, dtype=bool)
        m[good.astype(np.int64)] = True
        good = m
    core = K.kcore_mask(g.indptr, g.indices, good, int(params.core_degree))
    if not core.any():
        raise PhaseFailure(phase, "core_empty")
    S = largest_component(g, core)
    if S.shape[0] < params.core_size:
        raise PhaseFailure(phase, "core_small", f"|S|={S.shape[0]} < {params.core_size:.1f}")
    if not diameter_within(g, S, params.diam_bound, max_exact=DIAM_EXACT_LIMIT):
        raise PhaseFailure(phase, "core_diameter", f"bound {params.diam_bound:.1f}")
    return S


def find_port(s: ColorState, candidates, S, S_mask, lazy: bool, label: str):
    """Recolour candidates x S; return (y, u) for the first candidate with a red
    neighbour u in S (lowest u), or None."""
    if len(candidates) == 0:
        return None
    rows = np.asarray(candidates, dtype=np.int64)
    s.recolour_block(rows, S, stop_after_red=lazy, label=label)
    for y in candidates:
        reds = [w for w in s.red_adj[y] if S_mask[w]]
        if reds:
            return y, min(reds)
    return None


def classify_anchors(ctx: PhaseContext, x: int) -> tuple[AnchorCase, list, list, list]:
    """Pick anchors and open the cycle into a red path Q through x.

    Returns (case, Q, cut cycle edges, off-cycle vertices added).
    """
    s, cyc = ctx.s, ctx.cycle
    nbrs = sorted(s.red_adj[x])
    on = [w for w in nbrs if cyc.pos[w] >= 0]
    off = [w for w in nbrs if cyc.pos[w] < 0]
    if on and off:
        z1, z2 = on[0], off[0]
        Q = cyc.arc(cyc.succ(z1), z1) + [x, z2]
        return AnchorCase("a", z1, z2), Q, [(z1, cyc.succ(z1))], [x, z2]
    if len(on) >= 2:
        z1, z1b = on[0], on[1]
        head = cyc.arc(cyc.succ(z1), z1b)
        tail = cyc.arc(cyc.succ(z1b), z1)[::-1]
        Q = head + [x] + tail
        return (AnchorCase("b", z1, z1b), Q,
                [(z1, cyc.succ(z1)), (z1b, cyc.succ(z1b))], [x])
    if len(off) >= 2:
        z2, z2b = off[0], off[1]
        c1 = np.flatnonzero(ctx.c1_mask)
        s.recolour_block(np.array([z2]), c1, label="phase3-anchor")
        hooks = [w for w in s.red_adj[z2] if cyc.pos[w] >= 0]
        if not hooks:
            raise PhaseFailure(3, "no_anchor", f"off-cycle anchor {z2} has no red cycle neighbour")
        w = min(hooks)
        Q = cyc.arc(cyc.succ(w), w) + [z2, x, z2b]
        return AnchorCase("c", w, z2), Q, [(w, cyc.succ(w))], [z2, x, z2b]
    raise PhaseFailure(3, "tiny_degree", f"vertex {x} has {len(nbrs)} red neighbours")


def splice_through_core(ctx: PhaseContext, Q: list, S: np.ndarray, phase: int,
                        label: str) -> tuple[list, list, tuple]:
    """Rotate both ends of Q onto ports of S and close through S.

    Returns (new cycle order, removed path edges, (y1, y2)).
    """
    s = ctx.s
    n = s.n
    on_old = ctx.cycle.pos >= 0
    S_mask = np.zeros(n, dtype=bool)
    S_mask[S] = True
    lazy = ctx.params.lazy_ports
    e1, e2 = Q[0], Q[-1]
    s.recolour_block(np.array([e1, e2], dtype=np.int64), np.flatnonzero(ctx.c1_mask),
                     label=label + "-ends")

    qpos = np.full(n, -1, dtype=np.int64)
    qpos[np.asarray(Q, dtype=np.int64)] = np.arange(len(Q))
    cand = {}
    for a in s.red_adj[e1]:
        t = int(qpos[a])
        if ctx.c1_mask[a] and t >= 2 and on_old[Q[t - 1]]:
            cand[Q[t - 1]] = t
    B1 = sorted(cand, key=cand.get)
    port1 = find_port(s, B1, S, S_mask, lazy, label + "-port1")
    if port1 is None:
        raise PhaseFailure(phase, "no_port_1", f"{len(B1)} candidates")
    y1, u1 = port1
    t1 = cand[y1]
    Q1 = Q[t1 - 1::-1] + Q[t1:]

    qpos[np.asarray(Q1, dtype=np.int64)] = np.arange(len(Q1))
    L = len(Q1)
    cand = {}
    for a in s.red_adj[e2]:
        t = int(qpos[a])
        if ctx.c1_mask[a] and 0 <= t <= L - 3 and on_old[Q1[t + 1]]:
            cand[Q1[t + 1]] = t
    B2 = sorted(cand, key=cand.get)
    port2 = find_port(s, B2, S, S_mask, lazy, label + "-port2")
    if port2 is None:
        raise PhaseFailure(phase, "no_port_2", f"{len(B2)} candidates")
    y2, u2 = port2
    t2 = cand[y2]
    Q2 = Q1[:t2 + 1] + Q1[:t2:-1]

    path = shortest_red_path(ctx.red_u, S_mask, u2, u1)
    if path is None:
        raise PhaseFailure(phase, "no_core_path")
    removed = [(Q[t1 - 1], Q[t1]), (Q1[t2], Q1[t2 + 1])]
    return Q2 + path, removed, (y1, y2)


def newcomers(cycle: RedCycle, order) -> np.ndarray:
    arr = np.asarray(order, dtype=np.int64)
    return arr[cycle.pos[arr] < 0]


def absorb_tiny_vertex(ctx: PhaseContext, x: int) -> AnchorCase:
    s, params = ctx.s, ctx.params
    before = set(ctx.cycle.order) if ctx.audit else set()
    case, Q, cuts, added = classify_anchors(ctx, x)
    good = ctx.good_set(params.bad_threshold_p3, exclude=added)
    S = select_expander_core(ctx.red_u, good, params, phase=3)
    order, removed, (y1, y2) = splice_through_core(ctx, Q, S, 3, "phase3")
    anchors = [case.z1, y1, y2] + ([cuts[1][0]] if case.tag == "b" else [])
    new = newcomers(ctx.cycle, order)
    ctx.cycle.replace(order)
    ctx.drop_blocks(cuts + removed, extra=anchors)
    ctx.exp[new] = False
    ctx.check_step(before, set(new.tolist()), 3)
    return case


def run_phase3(ctx: PhaseContext) -> PhaseContext:
    start = ctx.s.oracle.stats()
    cases = {"a": 0, "b": 0, "c": 0}
    for x in list(ctx.tiny):
        if ctx.cycle.pos[x] >= 0:
            continue
        case = absorb_tiny_vertex(ctx, x)
        cases[case.tag] += 1
    ctx.tiny = []
    ctx.telemetry["phase3"] = {
        "absorbed": sum(cases.values()), "cases": cases, "J": len(ctx.J),
        "positives": ctx.s.oracle.stats().positives - start.positives,
    }
    return ctx
