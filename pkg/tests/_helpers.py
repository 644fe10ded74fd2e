"""Shared test utilities: scripted clocks, exhaustive small graphs,
engine-vs-oracle trajectory comparison."""

from __future__ import annotations

import numpy as np

from rcplab.engine import SimConfig, materialize_marks, simulate_from_marks
from rcplab.graph import Graph
from rcplab.oracle import ReachabilityOracle


class ScriptedGaps:
    """Waiting-time 'distribution' that replays a fixed gap sequence.

    Ignores the uniforms a clock feeds it; once the script runs out it
    returns +inf gaps (no further marks).
    """

    def __init__(self, gaps):
        self._gaps = list(gaps)

    def sample_many(self, u):
        u = np.asarray(u)
        out = np.full(u.shape, np.inf)
        flat = out.reshape(-1)
        for i in range(flat.size):
            if self._gaps:
                flat[i] = self._gaps.pop(0)
        return out


class FakeClock:
    """Clock over an explicit sorted mark list (for hand-traced recursions)."""

    def __init__(self, marks):
        self.marks = np.asarray(sorted(marks), dtype=float)

    def advance_to(self, t, collect=False):
        return None

    def excess(self, t):
        i = int(np.searchsorted(self.marks, t, side="right"))
        if i >= self.marks.size:
            raise RuntimeError("scripted clock exhausted")
        return float(self.marks[i]) - t


def connected_labeled_graphs(max_n: int = 3):
    """Every connected labeled graph on 1..max_n vertices."""
    from itertools import combinations

    out = []
    for n in range(1, max_n + 1):
        all_edges = list(combinations(range(n), 2))
        for mask in range(1 << len(all_edges)):
            edges = tuple(e for i, e in enumerate(all_edges) if mask >> i & 1)
            try:
                out.append(Graph(n, edges))
            except ValueError:
                continue
    return out


def trajectory_mismatches(config: SimConfig) -> int:
    """Run the traced engine and the reachability oracle on the same marks;
    count state disagreements at event times (plus extinction-time clashes)."""
    cure, edges = materialize_marks(config)
    result, trace = simulate_from_marks(config, cure, edges, want_trace=True)
    orc = ReachabilityOracle(cure, edges, config.graph.edges, config.v0,
                             config.horizon)
    n_v = config.graph.n_vertices
    state = [0] * n_v
    state[config.v0] = 1
    entries = trace.entries
    times = []
    engine_states = []
    # engine state after each mark event, with same-time flips applied
    # (flip entries always directly follow their mark entry)
    for i, (t, kind, ident, _) in enumerate(entries):
        if kind == "infect":
            state[ident] = 1
        elif kind == "recover":
            state[ident] = 0
        if kind in ("cure", "transmit"):
            j = i + 1
            s = list(state)
            while j < len(entries) and entries[j][0] == t and entries[j][1] in (
                "infect", "recover", "extinct"
            ):
                if entries[j][1] == "infect":
                    s[entries[j][2]] = 1
                elif entries[j][1] == "recover":
                    s[entries[j][2]] = 0
                j += 1
            times.append(t)
            engine_states.append(s)
    bad = 0
    if times:
        oracle_states = orc.states_matrix(np.asarray(times))
        bad += int((oracle_states != np.asarray(engine_states, dtype=np.int8)).any(axis=1).sum())
    oracle_ext = orc.extinction_time()
    if result.extinction_time is None:
        if oracle_ext is not None:
            bad += 1
    elif oracle_ext is None or abs(oracle_ext - result.extinction_time) > 0:
        bad += 1
    # the compiled path must agree with the traced reference exactly
    fast = simulate_from_marks(config, cure, edges)
    if fast != result:
        bad += 1
    return bad
