"""Numba kernels over the exposure log.

The log is passed around as a flat tuple of arrays (see ``exposure.py`` for
the layout). A pair is *covered* when some recorded event exposed it.
"""

import numba as nb
import numpy as np

from ._hash import nb_uniform

INF = np.int64(1 << 62)

EX_KEYS, EX_PHYS = 0, 1
SC_TIN, SC_TOUT, SC_CPTR, SC_CIDX, SC_FKEY, SC_FPROB = 2, 3, 4, 5, 6, 7
RIX_PTR, RIX_SEG, RIX_POS = 8, 9, 10
BK_CPTR, BK_COLS, BK_CRANK, BK_CUTR, BK_CUTC, BK_FKEY, BK_FPROB = 11, 12, 13, 14, 15, 16, 17
CAP_KEY, CAP_PROB = 18, 19


@nb.njit(cache=True)
def _cover_pairs(ex, exphys, tin, tout, scptr, scidx, sfkey, sfprob, rptr, rseg, rpos,
                 bcptr, bcols, bcrank, bcutr, bcutc, bfkey, bfprob, cap_key, cap_prob,
                 us, vs, out, phys):
    # Batched on purpose: calling a per-pair helper with twenty array
    # arguments costs reference-count traffic that dwarfs the lookup, so the
    # lookups (binary searches included) are written out inline here.
    for i in range(us.shape[0]):
        a = us[i]
        b = vs[i]
        out[i] = 0
        if a == b:
            continue
        key = (np.uint64(min(a, b)) << np.uint64(32)) | np.uint64(max(a, b))
        lo = 0
        hi = ex.shape[0]
        while lo < hi:
            mid = (lo + hi) >> 1
            if ex[mid] < key:
                lo = mid + 1
            else:
                hi = mid
        if lo < ex.shape[0] and ex[lo] == key and (not phys or exphys[lo] != 0):
            out[i] = 1
            continue
        hit = False
        for s in range(tin.shape[0]):
            for side in range(2):
                x = a if side == 0 else b
                y = b if side == 0 else a
                lo = scptr[s, x]
                end = scptr[s, x + 1]
                hi = end
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if scidx[mid] < y:
                        lo = mid + 1
                    else:
                        hi = mid
                if lo < end:
                    rnd = tin[s, scidx[lo]]
                else:
                    rnd = tout[s, x]
                if rnd < INF and tin[s, y] >= rnd:
                    hit = nb_uniform(sfkey[s], a, b) < sfprob[s]
                    break
            if hit:
                break
        if not hit:
            for side in range(2):
                x = a if side == 0 else b
                y = b if side == 0 else a
                for idx in range(rptr[x], rptr[x + 1]):
                    L = rseg[idx]
                    rp = rpos[idx]
                    lo = bcptr[L]
                    end = bcptr[L + 1]
                    hi = end
                    while lo < hi:
                        mid = (lo + hi) >> 1
                        if bcols[mid] < y:
                            lo = mid + 1
                        else:
                            hi = mid
                    if lo >= end or bcols[lo] != y:
                        continue
                    cr = bcrank[lo]
                    if rp < bcutr[L] or (rp == bcutr[L] and cr <= bcutc[L]):
                        if nb_uniform(bfkey[L], a, b) < bfprob[L]:
                            hit = True
                            break
                if hit:
                    break
        if hit and phys and cap_prob < 1.0:
            hit = nb_uniform(cap_key, a, b) < cap_prob
        if hit:
            out[i] = 1


@nb.njit(cache=True)
def covered_many(log, us, vs, phys):
    """Mask of pairs (us[i], vs[i]) exposed by a recorded event.

    With ``phys`` the log-wide cap coin is applied, so only pairs that were
    physically sent to the oracle count.
    """
    (ex, exphys, tin, tout, scptr, scidx, sfkey, sfprob, rptr, rseg, rpos,
     bcptr, bcols, bcrank, bcutr, bcutc, bfkey, bfprob, ckey, cprob) = log
    out = np.zeros(us.shape[0], dtype=np.uint8)
    _cover_pairs(ex, exphys, tin, tout, scptr, scidx, sfkey, sfprob, rptr, rseg, rpos,
                 bcptr, bcols, bcrank, bcutr, bcutc, bfkey, bfprob, ckey[0], cprob[0],
                 us, vs, out, phys)
    return out


@nb.njit(cache=True)
def covered_pair(log, a, b, phys):
    us = np.array([a], dtype=np.int64)
    vs = np.array([b], dtype=np.int64)
    return covered_many(log, us, vs, phys)[0] != 0


@nb.njit(cache=True)
def run_block(log, rows, cols, rowpos, colrank, stop_red, fkey, fprob,
              okey, p, deg, count_deg):
    """Expose white pairs of rows x cols in row-major order.

    Returns (n_alg, n_phys, n_pos, red_u, red_v, cut_r, cut_c). The cut is the
    last visited position, inclusive.
    """
    (ex, exphys, tin, tout, scptr, scidx, sfkey, sfprob, rptr, rseg, rpos,
     bcptr, bcols, bcrank, bcutr, bcutc, bfkey, bfprob, ckey, cprob) = log
    cap_key = ckey[0]
    cap_p = cprob[0]
    capped = cap_p < 1.0
    n_alg = 0
    n_phys = 0
    n_pos = 0
    red_u = []
    red_v = []
    cut_r = rows.shape[0] - 1
    cut_c = cols.shape[0] - 1
    nc = cols.shape[0]
    rowbuf = np.empty(nc, dtype=np.int64)
    cov = np.empty(nc, dtype=np.uint8)
    for ri in range(rows.shape[0]):
        r = rows[ri]
        rowbuf[:] = r
        _cover_pairs(ex, exphys, tin, tout, scptr, scidx, sfkey, sfprob, rptr, rseg, rpos,
                     bcptr, bcols, bcrank, bcutr, bcutc, bfkey, bfprob, cap_key, cap_p,
                     rowbuf, cols, cov, False)
        for ci in range(nc):
            c = cols[ci]
            if r == c or cov[ci]:
                continue
            rp = rowpos[c]
            cr = colrank[r]
            if rp >= 0 and cr >= 0 and (rp < ri or (rp == ri and cr < ci)):
                continue
            if fprob < 1.0 and nb_uniform(fkey, r, c) >= fprob:
                continue
            n_alg += 1
            if count_deg:
                deg[r] += 1
                deg[c] += 1
            if capped and nb_uniform(cap_key, r, c) >= cap_p:
                continue
            n_phys += 1
            if nb_uniform(okey, r, c) < p:
                n_pos += 1
                red_u.append(r)
                red_v.append(c)
                if stop_red:
                    ru = np.array(red_u, dtype=np.int64)
                    rv = np.array(red_v, dtype=np.int64)
                    return n_alg, n_phys, n_pos, ru, rv, ri, ci
    ru = np.empty(len(red_u), dtype=np.int64)
    rv = np.empty(len(red_v), dtype=np.int64)
    for i in range(len(red_u)):
        ru[i] = red_u[i]
        rv[i] = red_v[i]
    return n_alg, n_phys, n_pos, ru, rv, cut_r, cut_c


@nb.njit(cache=True)
def _find(nxt, i):
    # next vertex >= i still unvisited (nxt has a sentinel at index n)
    root = i
    while nxt[root] != root:
        root = nxt[root]
    while nxt[i] != root:
        j = nxt[i]
        nxt[i] = root
        i = j
    return root


@nb.njit(cache=True)
def scan_dfs(n, okey, p, fkey, q, stop_balanced, cap_key, cap_p):
    """Depth-first exploration with filtered queries.

    Each round either discovers a new vertex (push), exhausts the top of the
    stack (pop), or starts a new root. Stops when |C| == |U| if
    ``stop_balanced``, else when everything is explored.
    """
    nxt = np.arange(n + 1)
    ptr = np.full(n, -1, dtype=np.int64)
    tin = np.full(n, INF, dtype=np.int64)
    tout = np.full(n, INF, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    sp = 0
    order_c = np.empty(n, dtype=np.int64)
    n_c = 0
    n_u = n
    n_q = 0
    n_phys = 0
    n_pos = 0
    n_cons = 0
    rnd = 0
    while True:
        if stop_balanced and n_c == n_u:
            break
        if n_c == n:
            break
        if sp == 0:
            w = _find(nxt, 0)
            nxt[w] = w + 1
            n_u -= 1
            tin[w] = rnd
            stack[sp] = w
            sp += 1
            rnd += 1
            continue
        a = stack[sp - 1]
        u = _find(nxt, ptr[a] + 1)
        found = -1
        while u < n:
            n_cons += 1
            if nb_uniform(fkey, a, u) < q:
                n_q += 1
                if cap_p < 1.0 and nb_uniform(cap_key, a, u) >= cap_p:
                    u = _find(nxt, u + 1)
                    continue
                n_phys += 1
                if nb_uniform(okey, a, u) < p:
                    n_pos += 1
                    found = u
                    break
            u = _find(nxt, u + 1)
        if found >= 0:
            ptr[a] = found
            nxt[found] = found + 1
            n_u -= 1
            tin[found] = rnd
            parent[found] = a
            stack[sp] = found
            sp += 1
        else:
            ptr[a] = n
            tout[a] = rnd
            sp -= 1
            order_c[n_c] = a
            n_c += 1
        rnd += 1
    return (tin, tout, parent, stack[:sp].copy(), order_c[:n_c].copy(), n_q, n_phys, n_pos,
            n_cons, rnd)


@nb.njit(cache=True)
def scan_tree(n, okey, p):
    """Grow a tree from vertex 0, scanners taken in insertion order.

    The oldest tree vertex with unscanned outside vertices queries them in
    increasing order until it finds an edge. Stops when the tree spans or all
    scanners are exhausted.
    """
    nxt = np.arange(n + 1)
    ptr = np.full(n, -1, dtype=np.int64)
    tin = np.full(n, INF, dtype=np.int64)
    tout = np.full(n, INF, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    tin[0] = 0
    nxt[0] = 1
    order[0] = 0
    size = 1
    head = 0
    rnd = 1
    n_q = 0
    n_pos = 0
    while size < n and head < size:
        a = order[head]
        u = _find(nxt, ptr[a] + 1)
        found = -1
        while u < n:
            n_q += 1
            if nb_uniform(okey, a, u) < p:
                n_pos += 1
                found = u
                break
            u = _find(nxt, u + 1)
        if found >= 0:
            ptr[a] = found
            nxt[found] = found + 1
            tin[found] = rnd
            parent[found] = a
            order[size] = found
            size += 1
        else:
            ptr[a] = n
            tout[a] = rnd
            head += 1
        rnd += 1
    return tin, tout, parent, order[:size].copy(), n_q, n_pos


@nb.njit(cache=True)
def kcore_mask(indptr, indices, mask, k):
    """Peel vertices of degree < k from the subgraph induced by ``mask``."""
    n = indptr.shape[0] - 1
    alive = mask.copy()
    deg = np.zeros(n, dtype=np.int64)
    for v in range(n):
        if alive[v]:
            d = 0
            for j in range(indptr[v], indptr[v + 1]):
                if alive[indices[j]]:
                    d += 1
            deg[v] = d
    queue = np.empty(n, dtype=np.int64)
    qh = 0
    qt = 0
    for v in range(n):
        if alive[v] and deg[v] < k:
            queue[qt] = v
            qt += 1
            alive[v] = False
    while qh < qt:
        v = queue[qh]
        qh += 1
        for j in range(indptr[v], indptr[v + 1]):
            w = indices[j]
            if alive[w]:
                deg[w] -= 1
                if deg[w] < k:
                    alive[w] = False
                    queue[qt] = w
                    qt += 1
    return alive


@nb.njit(cache=True)
def bfs_dist(indptr, indices, mask, src):
    """Hop distances from src inside the subgraph induced by mask (-1 = unreachable)."""
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    dist[src] = 0
    queue[0] = src
    qh = 0
    qt = 1
    while qh < qt:
        v = queue[qh]
        qh += 1
        for j in range(indptr[v], indptr[v + 1]):
            w = indices[j]
            if mask[w] and dist[w] < 0:
                dist[w] = dist[v] + 1
                queue[qt] = w
                qt += 1
    return dist
