"""Phase I: filtered depth-first search for a long red path, then close it.

The search keeps vertices in three sets: C (finished), A (the stack, which
spans a red path) and U (unvisited). Each pair is offered to the oracle only
if an algorithm-side coin with probability q agrees, and the search stops
the first time |C| == |U|. The path is then closed into a cycle by scanning
pairs between an interval at its start and one near its end.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import PhaseFailure
from .params import ParamSet
from .tricolor import ColorState


@dataclass
class DfsState:
    C: np.ndarray
    A: np.ndarray
    U: np.ndarray
    parent: np.ndarray
    queries: int
    positives: int
    considered: int
    rounds: int

    def path_edges(self) -> list[tuple[int, int]]:
        a = self.A.tolist()
        return list(zip(a[:-1], a[1:]))


@dataclass
class Phase1Out:
    cycle: list
    U: np.ndarray
    telemetry: dict = field(default_factory=dict)


def randomized_dfs(s: ColorState, params: ParamSet) -> DfsState:
    if not s.log.is_empty():
        raise PhaseFailure(1, "not_fresh", "the search needs an all-white state")
    res = s.run_dfs(params.q)
    n = s.n
    in_u = res.t_in >= (1 << 62)
    return DfsState(
        C=np.sort(res.completed), A=res.stack, U=np.flatnonzero(in_u),
        parent=res.parent, queries=res.queries, positives=res.positives,
        considered=res.considered, rounds=res.rounds)


def close_cycle(s: ColorState, path, params: ParamSet) -> Phase1Out:
    """Scan I1 x I2 with the q-filter until the first red pair (a_i, a_j)."""
    path = np.asarray(path, dtype=np.int64)
    n = s.n
    k = params.k_interval
    if k < 1 or 4 * k > n:
        raise PhaseFailure(1, "interval", f"k={k} does not fit n={n}")
    if path.shape[0] < n - 2 * k:
        raise PhaseFailure(1, "short_path", f"|A|={path.shape[0]} < n-2k={n - 2 * k}")
    rows = path[:k]
    cols = path[n - 3 * k:n - 2 * k]
    res = s.recolour_block(rows, cols, stop_after_red=True, filter_prob=params.q,
                           label="phase1-close")
    if res.positives == 0:
        raise PhaseFailure(1, "no_closing_edge")
    pos = {int(v): i for i, v in enumerate(path.tolist())}
    i, j = sorted((pos[int(res.red_u[0])], pos[int(res.red_v[0])]))
    cyc = path[i:j + 1].tolist()
    on = np.zeros(n, dtype=bool)
    on[cyc] = True
    return Phase1Out(cycle=cyc, U=np.flatnonzero(~on),
                     telemetry={"close_queries": res.queries, "i": i, "j": j})


def run_phase1(s: ColorState, params: ParamSet) -> tuple[DfsState, Phase1Out]:
    dfs = randomized_dfs(s, params)
    k = params.k_interval
    if dfs.C.shape[0] > k:
        raise PhaseFailure(1, "dfs_too_large", f"|C|={dfs.C.shape[0]} > k={k}")
    out = close_cycle(s, dfs.A, params)
    out.telemetry.update({"C": int(dfs.C.shape[0]), "A": int(dfs.A.shape[0]),
                          "dfs_queries": dfs.queries, "dfs_considered": dfs.considered})
    return dfs, out
