"""Compiled event loop for the graphical construction.

Operates on fully materialized per-clock mark arrays (each ends with one mark
beyond the horizon, possibly +inf).  Event order: nondecreasing time; at equal
times cures before transmissions, then ascending index — realized here by a
strict-less linear scan that visits vertices before edges in index order.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def run(n_v, edge_u, edge_v, cure_flat, cure_off, edge_flat, edge_off, v0, horizon):
    n_e = edge_u.shape[0]
    k = n_v + n_e
    cursor = np.zeros(k, dtype=np.int64)
    nxt = np.empty(k, dtype=np.float64)
    for v in range(n_v):
        nxt[v] = cure_flat[cure_off[v]]
    for e in range(n_e):
        nxt[n_v + e] = edge_flat[edge_off[e]]
    infected = np.zeros(n_v, dtype=np.uint8)
    infected[v0] = 1
    n_inf = 1
    peak = 1
    events = 0
    ext = np.nan
    while n_inf > 0:
        best = 0
        bt = nxt[0]
        for i in range(1, k):
            if nxt[i] < bt:
                bt = nxt[i]
                best = i
        if bt > horizon:
            break
        events += 1
        if best < n_v:
            v = best
            if infected[v] == 1:
                infected[v] = 0
                n_inf -= 1
                if n_inf == 0:
                    ext = bt
            cursor[v] += 1
            nxt[v] = cure_flat[cure_off[v] + cursor[v]]
        else:
            e = best - n_v
            x = edge_u[e]
            y = edge_v[e]
            if infected[x] != infected[y]:
                if infected[x] == 1:
                    infected[y] = 1
                else:
                    infected[x] = 1
                n_inf += 1
                if n_inf > peak:
                    peak = n_inf
            cursor[n_v + e] += 1
            nxt[n_v + e] = edge_flat[edge_off[e] + cursor[n_v + e]]
    return ext, peak, events, infected
