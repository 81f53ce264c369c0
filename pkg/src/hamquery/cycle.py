"""Oriented cycle over a subset of the vertices, with O(1) position lookup."""

import numpy as np


class RedCycle:
    def __init__(self, n: int, order):
        self.n = n
        self.order = [int(v) for v in order]
        self.pos = np.full(n, -1, dtype=np.int64)
        self.pos[np.asarray(self.order, dtype=np.int64)] = np.arange(len(self.order))

    def __len__(self):
        return len(self.order)

    def __contains__(self, v) -> bool:
        return self.pos[v] >= 0

    def succ(self, v: int) -> int:
        return self.order[(self.pos[v] + 1) % len(self.order)]

    def pred(self, v: int) -> int:
        return self.order[self.pos[v] - 1]

    def mask(self) -> np.ndarray:
        return self.pos >= 0

    def vertices(self) -> np.ndarray:
        return np.asarray(self.order, dtype=np.int64)

    def arc(self, a: int, b: int) -> list[int]:
        """Vertices from a forward to b, inclusive."""
        i, j = int(self.pos[a]), int(self.pos[b])
        if i <= j:
            return self.order[i:j + 1]
        return self.order[i:] + self.order[:j + 1]

    def replace(self, order) -> None:
        self.pos[np.asarray(self.order, dtype=np.int64)] = -1
        self.order = [int(v) for v in order]
        self.pos[np.asarray(self.order, dtype=np.int64)] = np.arange(len(self.order))

    def edges(self):
        L = len(self.order)
        return [(self.order[i], self.order[(i + 1) % L]) for i in range(L)]

    def edge_set(self) -> set:
        return {(min(a, b), max(a, b)) for a, b in self.edges()}


def audit_red_cycle(state, order) -> str | None:
    """None if order is a red cycle without repeated vertices, else a reason."""
    if len(order) < 3:
        return "cycle shorter than 3"
    if len(set(order)) != len(order):
        return "repeated vertex"
    L = len(order)
    for i in range(L):
        a, b = order[i], order[(i + 1) % L]
        if b not in state.red_adj[a]:
            return f"pair ({a}, {b}) is not red"
    return None
