"""Discrete-event realization of the renewal contact process.

The Harris-style graphical construction is materialized literally: every
vertex owns a renewal cure clock, every edge a rate-lambda Poisson
transmission clock, and all marks up to the horizon are generated from
streams keyed by (seed, kind, index) — so a vertex's cure marks do not
depend on whether it is ever infected, and replications are reproducible
regardless of scheduling.

Semantics per event, in (time, cure-before-transmit, index) order:
a cure makes its vertex healthy; a transmission mark infects a healthy
endpoint iff the other endpoint is infected at that instant.  A cure at
exactly a transmission time therefore blocks outgoing infection from the
cured vertex but not incoming re-infection.

Two executors share the same mark arrays: a compiled kernel for throughput
and a pure-Python loop that can additionally record a full trace.  They are
equal by construction and by test.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rngstream
from .graph import Graph
from .heavytail import ExponentialRate, HeavyTailSpec
from .renewal import marks_through

try:
    from . import _kernel
except ImportError:  # numba unavailable; the python loop handles everything
    _kernel = None


class EngineResourceError(RuntimeError):
    """Mark/trace budget exceeded; carries partial diagnostics."""


@dataclass(frozen=True)
class SimConfig:
    graph: Graph
    dist: HeavyTailSpec
    lam: float
    horizon: float
    seed: int
    v0: int = 0
    trace: bool = False
    checkpoints: tuple = ()
    max_marks: int = 80_000_000
    max_trace_entries: int = 20_000_000

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")
        if not self.horizon > 0 or not math.isfinite(self.horizon):
            raise ValueError("horizon must be finite and > 0")
        if not 0 <= self.v0 < self.graph.n_vertices:
            raise ValueError(f"v0={self.v0} not a vertex")
        cps = tuple(float(c) for c in self.checkpoints)
        if any(c <= 0 or c > self.horizon for c in cps):
            raise ValueError("checkpoints must lie in (0, horizon]")
        if list(cps) != sorted(cps):
            raise ValueError("checkpoints must be sorted ascending")
        object.__setattr__(self, "checkpoints", cps)


@dataclass(frozen=True)
class SimResult:
    extinction_time: Optional[float]
    censored: bool
    survival_at_checkpoints: tuple
    peak_infected: int
    events_processed: int
    final_state: tuple

    def to_dict(self) -> dict:
        return {
            "extinction_time": self.extinction_time,
            "censored": self.censored,
            "survival_at_checkpoints": list(self.survival_at_checkpoints),
            "peak_infected": self.peak_infected,
            "events_processed": self.events_processed,
            "final_state": list(self.final_state),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class Trace:
    """Event log: every processed mark and every state change, in order.

    Entry kinds: 'cure' and 'transmit' are processed marks (id = vertex or
    edge index); 'infect' and 'recover' are state flips (id = vertex, detail
    = triggering edge index or -1); 'extinct' closes the log.
    """

    entries: list = field(default_factory=list)
    cure_marks: list = field(default_factory=list)      # per-vertex arrays
    transmit_marks: list = field(default_factory=list)  # per-edge arrays

    def transmit_times(self) -> np.ndarray:
        times = [t for t, kind, _, _ in self.entries if kind == "transmit"]
        return np.asarray(times)

    def to_csv(self) -> str:
        lines = ["time,kind,id,detail"]
        for t, kind, ident, detail in self.entries:
            lines.append(f"{t:.17g},{kind},{ident},{detail}")
        return "\n".join(lines) + "\n"

    def marks_csv(self) -> str:
        lines = ["kind,id,n,time"]
        for v, marks in enumerate(self.cure_marks):
            for n, t in enumerate(marks, start=1):
                lines.append(f"cure,{v},{n},{t:.17g}")
        for e, marks in enumerate(self.transmit_marks):
            for n, t in enumerate(marks, start=1):
                lines.append(f"edge,{e},{n},{t:.17g}")
        return "\n".join(lines) + "\n"


def materialize_marks(config: SimConfig):
    """Per-vertex cure marks and per-edge transmission marks through the horizon.

    Each array holds all marks <= horizon plus the first one beyond (or +inf).
    """
    g = config.graph
    est = config.lam * config.horizon * g.n_edges
    if est > config.max_marks:
        raise EngineResourceError(
            f"expected ~{est:.3g} transmission marks exceeds budget "
            f"{config.max_marks}; lower the horizon or raise max_marks"
        )
    edge_dist = ExponentialRate(config.lam)
    total = 0
    cure = []
    for v in range(g.n_vertices):
        m = marks_through(config.dist, rngstream.stream(config.seed, rngstream.VERTEX, v),
                          config.horizon)
        total += m.size
        cure.append(m)
    edges = []
    for e in range(g.n_edges):
        m = marks_through(edge_dist, rngstream.stream(config.seed, rngstream.EDGE, e),
                          config.horizon)
        total += m.size
        if total > config.max_marks:
            raise EngineResourceError(
                f"mark budget exceeded after edge {e}: {total} > {config.max_marks}"
            )
        edges.append(m)
    return cure, edges


def _flatten(arrays):
    flat = np.concatenate(arrays) if arrays else np.empty(0)
    off = np.zeros(len(arrays) + 1, dtype=np.int64)
    np.cumsum([a.size for a in arrays], out=off[1:])
    return flat, off[:-1]


def _run_python(config: SimConfig, cure, edges, recorder: Optional[Trace]):
    g = config.graph
    n_v = g.n_vertices
    horizon = config.horizon
    cursor = [0] * (n_v + g.n_edges)
    heap = []
    for v in range(n_v):
        heap.append((float(cure[v][0]), 0, v))
    for e in range(g.n_edges):
        heap.append((float(edges[e][0]), 1, e))
    heapq.heapify(heap)
    infected = [False] * n_v
    infected[config.v0] = True
    n_inf = 1
    peak = 1
    events = 0
    ext = None
    log = recorder.entries if recorder is not None else None
    max_entries = config.max_trace_entries
    while n_inf > 0 and heap:
        t, kind, idx = heap[0]
        if t > horizon:
            break
        events += 1
        if kind == 0:
            v = idx
            if log is not None:
                log.append((t, "cure", v, -1))
            if infected[v]:
                infected[v] = False
                n_inf -= 1
                if log is not None:
                    log.append((t, "recover", v, -1))
                if n_inf == 0:
                    ext = t
                    if log is not None:
                        log.append((t, "extinct", -1, -1))
            cursor[v] += 1
            nt = float(cure[v][cursor[v]])
            heapq.heapreplace(heap, (nt, 0, v))
        else:
            e = idx
            x, y = g.edges[e]
            if log is not None:
                log.append((t, "transmit", e, -1))
            if infected[x] != infected[y]:
                z = y if infected[x] else x
                infected[z] = True
                n_inf += 1
                if n_inf > peak:
                    peak = n_inf
                if log is not None:
                    log.append((t, "infect", z, e))
            cursor[n_v + e] += 1
            nt = float(edges[e][cursor[n_v + e]])
            heapq.heapreplace(heap, (nt, 1, e))
        if log is not None and len(log) > max_entries:
            raise EngineResourceError(
                f"trace budget exceeded at t={t} after {events} events "
                f"({len(log)} entries > {max_entries})"
            )
    return ext, peak, events, infected


def _result(config: SimConfig, ext, peak, events, infected) -> SimResult:
    censored = ext is None
    surv = tuple(censored or ext > c for c in config.checkpoints)
    return SimResult(
        extinction_time=ext,
        censored=censored,
        survival_at_checkpoints=surv,
        peak_infected=int(peak),
        events_processed=int(events),
        final_state=tuple(int(b) for b in infected),
    )


def simulate_from_marks(config: SimConfig, cure, edges, want_trace: bool = False):
    """Run the event loop on explicit mark arrays (scripted clocks welcome).

    Every array must contain one mark beyond the horizon as terminator.
    """
    for arr in list(cure) + list(edges):
        if arr[-1] <= config.horizon:
            raise ValueError("each mark array needs a terminator beyond the horizon")
    if want_trace:
        recorder = Trace(cure_marks=list(cure), transmit_marks=list(edges))
        ext, peak, events, infected = _run_python(config, cure, edges, recorder)
        return _result(config, ext, peak, events, infected), recorder
    if _kernel is not None:
        g = config.graph
        edge_u = np.array([e[0] for e in g.edges], dtype=np.int64)
        edge_v = np.array([e[1] for e in g.edges], dtype=np.int64)
        cure_flat, cure_off = _flatten(cure)
        edge_flat, edge_off = _flatten(edges)
        ext, peak, events, infected = _kernel.run(
            g.n_vertices, edge_u, edge_v, cure_flat, cure_off, edge_flat, edge_off,
            config.v0, config.horizon,
        )
        ext = None if math.isnan(ext) else float(ext)
        return _result(config, ext, peak, events, list(map(bool, infected)))
    ext, peak, events, infected = _run_python(config, cure, edges, None)
    return _result(config, ext, peak, events, infected)


def simulate(config: SimConfig) -> SimResult:
    """One replication; deterministic given (config, seed)."""
    cure, edges = materialize_marks(config)
    if config.trace:
        result, _ = simulate_from_marks(config, cure, edges, want_trace=True)
        return result
    return simulate_from_marks(config, cure, edges)


def simulate_trace(config: SimConfig):
    """Replication plus the full mark record and state-change log."""
    cure, edges = materialize_marks(config)
    return simulate_from_marks(config, cure, edges, want_trace=True)


def replay(trace: Trace, config: SimConfig) -> SimResult:
    """Rebuild the SimResult from the state-change log alone."""
    n_v = config.graph.n_vertices
    infected = [False] * n_v
    infected[config.v0] = True
    n_inf, peak, events, ext = 1, 1, 0, None
    for t, kind, ident, _ in trace.entries:
        if kind in ("cure", "transmit"):
            events += 1
        elif kind == "infect":
            infected[ident] = True
            n_inf += 1
            peak = max(peak, n_inf)
        elif kind == "recover":
            infected[ident] = False
            n_inf -= 1
        elif kind == "extinct":
            ext = t
    return _result(config, ext, peak, events, infected)
