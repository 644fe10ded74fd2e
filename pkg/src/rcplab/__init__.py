"""Laboratory for the renewal contact process on finite graphs.

Simulates the contact process whose cures arrive at the marks of per-vertex
renewal processes with heavy-tailed waiting times, and numerically checks
the renewal asymptotics, limit laws, survival/extinction size thresholds
and domination machinery that govern it.
"""

__version__ = "0.1.0"

from .heavytail import ExponentialRate, HeavyTailSpec
from .graph import Graph, SpanningWalk, spanning_walk
from .engine import SimConfig, SimResult, simulate, simulate_trace

__all__ = [
    "ExponentialRate",
    "HeavyTailSpec",
    "Graph",
    "SpanningWalk",
    "spanning_walk",
    "SimConfig",
    "SimResult",
    "simulate",
    "simulate_trace",
    "__version__",
]
