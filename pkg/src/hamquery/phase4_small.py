"""Phase IV: absorb the SMALL vertices through reserved cycle blocks.

Every SMALL vertex y gets its own family J_y of surviving blocks in which it
has a red neighbour m_j on an inner vertex (families are disjoint, found by
a bipartite matching). To absorb y the cycle is cut after two witnesses
m_j1, m_j2, y is inserted between them, and the two loose ends s+(m_j1),
s+(m_j2) are joined through an expander core.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MatchingInfeasible, PhaseFailure
from .graphtools import shortest_red_path, star_matching
from .phase3_tiny import PhaseContext, newcomers, select_expander_core


@dataclass
class BlockFamily:
    blocks: dict = field(default_factory=dict)
    witness: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.blocks)


def allocate_block_families(ctx: PhaseContext) -> BlockFamily:
    s, blocks = ctx.s, ctx.blocks
    k = ctx.params.j_block_size
    pending = [y for y in ctx.small if ctx.cycle.pos[y] < 0]
    fam = BlockFamily()
    if not pending:
        return fam
    if k < 2:
        raise PhaseFailure(4, "family_size", f"j_block_size={k} < 2")
    inner = ctx.inner_surviving()
    wit: dict = {}
    nbrs = {}
    for y in pending:
        w_y = {}
        for w in sorted(s.red_adj[y]):
            if inner[w]:
                w_y.setdefault(int(blocks.of[w]), w)
        nbrs[y] = sorted(w_y)
        wit[y] = w_y
    try:
        stars = star_matching(nbrs, k)
    except MatchingInfeasible as exc:
        raise PhaseFailure(4, "matching", str(exc)) from None
    for y, js in stars.items():
        fam.blocks[y] = js
        fam.witness[y] = {j: wit[y][j] for j in js}
    return fam


def absorb_small_vertex(ctx: PhaseContext, y: int, family: BlockFamily) -> tuple[int, int]:
    s, params, cyc = ctx.s, ctx.params, ctx.cycle
    before = set(cyc.order) if ctx.audit else set()
    js = sorted(family.blocks[y])
    wit = family.witness[y]
    good = ctx.good_set(params.bad_threshold_p4)
    S = select_expander_core(ctx.red_u, good, params, phase=4)
    S_mask = np.zeros(s.n, dtype=bool)
    S_mask[S] = True
    ports = [cyc.succ(wit[j]) for j in js]
    found = []
    if params.lazy_ports:
        for j, a in zip(js, ports):
            s.recolour_block(np.array([a], dtype=np.int64), S, stop_after_red=True,
                             label="phase4-port")
            reds = [w for w in s.red_adj[a] if S_mask[w]]
            if reds:
                found.append((j, a, min(reds)))
                if len(found) == 2:
                    break
    else:
        s.recolour_block(np.asarray(ports, dtype=np.int64), S, label="phase4-ports")
        for j, a in zip(js, ports):
            reds = [w for w in s.red_adj[a] if S_mask[w]]
            if reds:
                found.append((j, a, min(reds)))
                if len(found) == 2:
                    break
    if len(found) < 2:
        raise PhaseFailure(4, "ports", f"vertex {y}: {len(found)} of {len(js)} blocks reach the core")
    (j1, a1, u1), (j2, a2, u2) = found
    m1, m2 = wit[j1], wit[j2]
    Q = cyc.arc(a1, m2) + [y] + cyc.arc(a2, m1)[::-1]
    path = shortest_red_path(ctx.red_u, S_mask, u2, u1)
    if path is None:
        raise PhaseFailure(4, "no_core_path")
    order = Q + path
    new = newcomers(cyc, order)
    cyc.replace(order)
    ctx.J.discard(j1)
    ctx.J.discard(j2)
    ctx.exp[new] = False
    ctx.check_step(before, set(new.tolist()), 4)
    return j1, j2


def run_phase4(ctx: PhaseContext, family: BlockFamily | None = None) -> PhaseContext:
    start = ctx.s.oracle.stats()
    if family is None:
        family = allocate_block_families(ctx)
    done = 0
    for y in sorted(family.blocks):
        if ctx.cycle.pos[y] >= 0:
            continue
        absorb_small_vertex(ctx, y, family)
        done += 1
    left = [y for y in ctx.small if ctx.cycle.pos[y] < 0]
    if left:
        raise PhaseFailure(4, "leftover", f"{len(left)} SMALL vertices not absorbed")
    ctx.small = []
    ctx.telemetry["phase4"] = {
        "absorbed": done, "J": len(ctx.J), "EXP3": int(ctx.exp.sum()),
        "positives": ctx.s.oracle.stats().positives - start.positives,
    }
    return ctx
