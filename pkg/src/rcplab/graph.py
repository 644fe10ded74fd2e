"""Finite connected graphs and the spanning walk used by the survival argument.

The walk is the Euler tour of a doubled spanning tree, concatenated with
itself once.  One tour visits every vertex, so for any ordered pair (x, y)
an occurrence of x in the first copy precedes an occurrence of y in the
second; the doubled tour therefore contains a contiguous sub-walk from x to
y, which a single tour does not guarantee (star graphs are the witness).
Length is at most 4(n-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field


class GraphConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    n_vertices: int
    edges: tuple  # tuple of (u, v) with u < v, no duplicates
    adjacency: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_vertices
        if n < 1:
            raise GraphConstructionError("graph needs at least one vertex")
        seen = set()
        adj = [[] for _ in range(n)]
        for idx, (u, v) in enumerate(self.edges):
            if u == v:
                raise GraphConstructionError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphConstructionError(f"edge ({u},{v}) out of range")
            if u > v:
                raise GraphConstructionError("edges must be stored as (min, max)")
            if (u, v) in seen:
                raise GraphConstructionError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
            adj[u].append((v, idx))
            adj[v].append((u, idx))
        object.__setattr__(self, "adjacency", tuple(tuple(a) for a in adj))
        comp = self._component(0)
        if len(comp) != n:
            rest = sorted(set(range(n)) - comp)
            raise GraphConstructionError(
                f"graph is disconnected: vertices {sorted(comp)} are separated "
                f"from {rest}"
            )

    def _component(self, start):
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y, _ in self.adjacency[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def describe(self) -> str:
        return getattr(self, "_label", f"custom(n={self.n_vertices},m={self.n_edges})")


def _label(g: Graph, label: str) -> Graph:
    object.__setattr__(g, "_label", label)
    return g


def complete(k: int) -> Graph:
    edges = tuple((i, j) for i in range(k) for j in range(i + 1, k))
    return _label(Graph(k, edges), f"complete:{k}")


def path(k: int) -> Graph:
    return _label(Graph(k, tuple((i, i + 1) for i in range(k - 1))), f"path:{k}")


def cycle(k: int) -> Graph:
    if k < 3:
        raise GraphConstructionError("cycle needs k >= 3")
    edges = [(i, i + 1) for i in range(k - 1)] + [(0, k - 1)]
    return _label(Graph(k, tuple(sorted(tuple(sorted(e)) for e in edges))), f"cycle:{k}")


def star(k: int) -> Graph:
    """Center 0 with k-1 leaves."""
    return _label(Graph(k, tuple((0, i) for i in range(1, k))), f"star:{k}")


def from_edges(edge_list) -> Graph:
    edges = sorted({tuple(sorted((int(u), int(v)))) for u, v in edge_list})
    n = max(max(e) for e in edges) + 1 if edges else 1
    return Graph(n, tuple(edges))


def from_file(path_str: str) -> Graph:
    """Edge-list text file: one 'u v' pair per line, '#' starts a comment."""
    pairs = []
    with open(path_str) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            u, v = line.split()
            pairs.append((int(u), int(v)))
    if not pairs:
        raise GraphConstructionError(f"no edges found in {path_str}")
    return from_edges(pairs)


def build(kind: str) -> Graph:
    """Parse 'complete:6', 'path:3', 'cycle:4', 'star:5' or 'custom:FILE'."""
    name, _, arg = kind.partition(":")
    name = name.strip().lower()
    if name == "custom":
        return from_file(arg)
    if not arg:
        raise GraphConstructionError(f"missing size in graph spec {kind!r}")
    k = int(arg)
    builders = {"complete": complete, "path": path, "cycle": cycle, "star": star}
    if name not in builders:
        raise GraphConstructionError(f"unknown graph kind {name!r}")
    if k < 1:
        raise GraphConstructionError("graph size must be >= 1")
    return builders[name](k)


@dataclass(frozen=True)
class SpanningWalk:
    """Edge walk whose contiguous sub-walks join every ordered vertex pair."""

    vertex_sequence: tuple
    edge_sequence: tuple  # edge indices into Graph.edges

    @property
    def length(self) -> int:
        return len(self.edge_sequence)

    def covers_all_pairs(self, g: Graph) -> bool:
        vs = self.vertex_sequence
        n = g.n_vertices
        ok = [[False] * n for _ in range(n)]
        for i, x in enumerate(vs):
            for y in vs[i:]:
                ok[x][y] = True
        return all(ok[x][y] for x in range(n) for y in range(n))


def spanning_walk(g: Graph) -> SpanningWalk:
    """Doubled-spanning-tree Euler tour, repeated twice; l <= 4(n-1)."""
    n = g.n_vertices
    if n == 1:
        return SpanningWalk((0,), ())
    # DFS spanning tree rooted at 0, children in ascending vertex order
    parent = {0: (None, None)}
    order = []
    stack = [0]
    seen = {0}
    while stack:
        x = stack.pop()
        order.append(x)
        for y, eidx in sorted(g.adjacency[x], reverse=True):
            if y not in seen:
                seen.add(y)
                parent[y] = (x, eidx)
                stack.append(y)
    children = {x: [] for x in range(n)}
    for y, (p, eidx) in parent.items():
        if p is not None:
            children[p].append((y, eidx))
    for x in children:
        children[x].sort()

    verts = [0]
    eidxs = []

    def tour(x):
        for y, eidx in children[x]:
            verts.append(y)
            eidxs.append(eidx)
            tour(y)
            verts.append(x)
            eidxs.append(eidx)

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 2 * n + 100))
    try:
        tour(0)
    finally:
        sys.setrecursionlimit(old)

    # concatenate the tour with itself (tour starts and ends at the root)
    verts2 = verts + verts[1:]
    eidxs2 = eidxs + eidxs
    return SpanningWalk(tuple(verts2), tuple(eidxs2))
