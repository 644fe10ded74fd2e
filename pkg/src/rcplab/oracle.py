"""Brute-force reachability oracle for the graphical construction.

Works directly from the complete mark record and the path definition:
an individual y is infected at time t iff there is a chain of transmission
marks m_1 < m_2 < ... <= t, starting at the initially infected vertex,
where each hop crosses an edge at one of its marks while the source end has
been cure-free since it was reached, and y is cure-free from its last hop
through t.

Realized as earliest-onset dynamic programming on vertex timeline segments
(the intervals between consecutive cure marks): processing transmission
marks in time order, a hop at mark m of edge (x, y) propagates infection to
y's segment containing m whenever x's segment containing m has onset <= m.
This shares no code or data structures with the event-loop engine.
"""

from __future__ import annotations

import numpy as np


class ReachabilityOracle:
    def __init__(self, cure_marks, edge_marks, edges, v0: int, horizon: float):
        self.cure = [np.asarray(c) for c in cure_marks]
        self.edges = list(edges)
        self.horizon = horizon
        n_v = len(self.cure)
        # onset[v][k] = earliest infection time in segment k = [c_k, c_{k+1}),
        # with c_0 = 0; +inf = never infected there
        self.onset = [np.full(self.cure[v].size + 1, np.inf) for v in range(n_v)]
        self.onset[v0][0] = 0.0

        marked = []
        for e, marks in enumerate(edge_marks):
            for m in np.asarray(marks):
                if m <= horizon:
                    marked.append((float(m), e))
        marked.sort()

        for m, e in marked:
            x, y = self.edges[e]
            sx = int(np.searchsorted(self.cure[x], m, side="right"))
            sy = int(np.searchsorted(self.cure[y], m, side="right"))
            inf_x = self.onset[x][sx] <= m
            inf_y = self.onset[y][sy] <= m
            if inf_x and not inf_y:
                self.onset[y][sy] = min(self.onset[y][sy], m)
            elif inf_y and not inf_x:
                self.onset[x][sx] = min(self.onset[x][sx], m)

    def infected(self, v: int, t: float) -> bool:
        k = int(np.searchsorted(self.cure[v], t, side="right"))
        return bool(self.onset[v][k] <= t)

    def state(self, t: float) -> tuple:
        return tuple(int(self.infected(v, t)) for v in range(len(self.cure)))

    def states_matrix(self, times) -> np.ndarray:
        """Infection indicator, shape (len(times), n_vertices)."""
        times = np.asarray(times, dtype=float)
        cols = []
        for v in range(len(self.cure)):
            seg = np.searchsorted(self.cure[v], times, side="right")
            cols.append(self.onset[v][seg] <= times)
        return np.stack(cols, axis=1).astype(np.int8)

    def extinction_time(self):
        """First time with nobody infected, None if censored.

        The infected set only shrinks at cure marks, and an all-healthy state
        is absorbing (every onset descends from an infected source), so it
        suffices to scan cure marks in time order.
        """
        candidates = sorted(
            float(m) for c in self.cure for m in c if m <= self.horizon
        )
        for t in candidates:
            if not any(self.infected(v, t) for v in range(len(self.cure))):
                return t
        return None
