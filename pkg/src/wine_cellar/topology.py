"""Wired interconnect topologies and hop-count analytics.

Graphs are undirected, vertices are integer rack ids, and every edge carries
a medium tag, a capacity in Gbps, and a fixed per-hop latency in
microseconds. Hop metrics use unit edge weight regardless of medium.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import ConfigurationError

WIRED = "wired"
SWINE = "s-WINE"
RWINE = "r-WINE"

DEFAULT_WIRED_CAPACITY_GBPS = 200.0  # two NDR-class 100 Gbps lanes per link
DEFAULT_HOP_LATENCY_US = 0.6


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    medium: str = WIRED
    capacity_gbps: float = DEFAULT_WIRED_CAPACITY_GBPS
    hop_latency_us: float = DEFAULT_HOP_LATENCY_US

    def key(self) -> Tuple[int, int, str]:
        a, b = (self.u, self.v) if self.u < self.v else (self.v, self.u)
        return (a, b, self.medium)


class InterconnectGraph:
    """Undirected multigraph with at most one edge per (pair, medium)."""

    def __init__(self, num_vertices: int):
        if num_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        self.num_vertices = num_vertices
        self._edges: Dict[Tuple[int, int, str], Edge] = {}
        self._adjacency: List[Dict[int, int]] = [dict() for _ in range(num_vertices)]
        self._neighbor_cache: Optional[List[List[int]]] = None

    def add_edge(self, edge: Edge) -> None:
        if edge.u == edge.v:
            raise ValueError(f"self-loop at vertex {edge.u}")
        if not (0 <= edge.u < self.num_vertices and 0 <= edge.v < self.num_vertices):
            raise ValueError(f"edge ({edge.u}, {edge.v}) outside vertex range")
        if edge.capacity_gbps <= 0:
            raise ValueError("edge capacity must be positive")
        key = edge.key()
        if key in self._edges:
            raise ValueError(f"duplicate edge {key}")
        self._edges[key] = edge
        self._neighbor_cache = None
        for a, b in ((edge.u, edge.v), (edge.v, edge.u)):
            self._adjacency[a][b] = self._adjacency[a].get(b, 0) + 1

    def remove_edge(self, u: int, v: int, medium: str) -> Edge:
        key = (min(u, v), max(u, v), medium)
        edge = self._edges.pop(key)
        self._neighbor_cache = None
        for a, b in ((u, v), (v, u)):
            mult = self._adjacency[a][b] - 1
            if mult:
                self._adjacency[a][b] = mult
            else:
                del self._adjacency[a][b]
        return edge

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adjacency[u]

    def neighbors(self, v: int) -> List[int]:
        if self._neighbor_cache is None:
            self._neighbor_cache = [sorted(adj) for adj in self._adjacency]
        return self._neighbor_cache[v]

    def multiplicity(self, u: int, v: int) -> int:
        return self._adjacency[u].get(v, 0)

    def degree(self, v: int) -> int:
        """Connection count of a vertex, counting parallel media separately."""
        return sum(self._adjacency[v].values())

    def edges(self) -> List[Edge]:
        return [self._edges[k] for k in sorted(self._edges)]

    def edges_by_medium(self, medium: str) -> List[Edge]:
        return [e for e in self.edges() if e.medium == medium]

    def copy(self) -> "InterconnectGraph":
        g = InterconnectGraph(self.num_vertices)
        for edge in self.edges():
            g.add_edge(edge)
        return g

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, InterconnectGraph)
            and self.num_vertices == other.num_vertices
            and self._edges == other._edges
        )


def build_torus(
    k: int,
    n: int,
    capacity_gbps: float = DEFAULT_WIRED_CAPACITY_GBPS,
    hop_latency_us: float = DEFAULT_HOP_LATENCY_US,
) -> InterconnectGraph:
    """k-ary n-cube: k^n racks on an n-dimensional wrap-around lattice.

    Every rack has exactly 2n lattice neighbors. k = 2 is rejected because
    wrap-around would duplicate the lattice edge.
    """
    if k < 3:
        raise ValueError(f"torus arity must be >= 3, got {k}")
    if n < 1:
        raise ValueError(f"torus dimension must be >= 1, got {n}")
    graph = InterconnectGraph(k**n)
    stride = 1
    for _ in range(n):
        for v in range(k**n):
            digit = (v // stride) % k
            w = v + stride if digit + 1 < k else v - (k - 1) * stride
            graph.add_edge(Edge(v, w, WIRED, capacity_gbps, hop_latency_us))
        stride *= k
    return graph


def build_fat_tree(
    r: int,
    levels: int,
    leaf_capacity_gbps: float = 100.0,
    hop_latency_us: float = DEFAULT_HOP_LATENCY_US,
) -> InterconnectGraph:
    """Complete r-ary tree with bandwidth proportional to tree level.

    An edge at depth d (root edges have depth 1) aggregates the traffic of
    r^(levels-1-d) leaves and carries leaf_capacity * r^(levels-1-d).
    """
    if r < 2:
        raise ValueError(f"fat-tree radix must be >= 2, got {r}")
    if levels < 2:
        raise ValueError(f"fat-tree needs >= 2 levels, got {levels}")
    num_vertices = (r**levels - 1) // (r - 1)
    graph = InterconnectGraph(num_vertices)
    # Vertices are numbered breadth-first: root 0, then level by level.
    level_start = 0
    for depth in range(1, levels):
        parents = range(level_start, level_start + r ** (depth - 1))
        child_start = level_start + r ** (depth - 1)
        capacity = leaf_capacity_gbps * r ** (levels - 1 - depth)
        for i, parent in enumerate(parents):
            for j in range(r):
                child = child_start + i * r + j
                graph.add_edge(Edge(parent, child, WIRED, capacity, hop_latency_us))
        level_start = child_start
    return graph


def build_dragonfly(
    a: int,
    h_global: int,
    g: int,
    local_capacity_gbps: float = DEFAULT_WIRED_CAPACITY_GBPS,
    global_capacity_gbps: float = DEFAULT_WIRED_CAPACITY_GBPS,
    hop_latency_us: float = DEFAULT_HOP_LATENCY_US,
) -> InterconnectGraph:
    """g groups of a fully meshed racks joined by per-rack global links.

    Each rack owns h_global global-edge endpoints; endpoints are wired
    round-robin over the group pairs so a balanced instance
    (g = a*h_global + 1) joins every group pair exactly once.
    """
    if a < 1 or g < 2 or h_global < 1:
        raise ValueError("dragonfly needs a >= 1, h_global >= 1, g >= 2")
    if a * h_global < g - 1:
        raise ConfigurationError(
            f"infeasible global wiring: a*h_global = {a * h_global} < g-1 = {g - 1}"
        )
    graph = InterconnectGraph(a * g)
    for group in range(g):
        base = group * a
        for i in range(a):
            for j in range(i + 1, a):
                graph.add_edge(
                    Edge(base + i, base + j, WIRED, local_capacity_gbps, hop_latency_us)
                )

    def endpoints_toward(group: int, peer: int) -> List[int]:
        # Endpoint e of a group targets peer (group + 1 + e mod (g-1)) mod g;
        # endpoint e lives on vertex e // h_global of the group.
        wanted = (peer - group - 1) % g
        return [e for e in range(a * h_global) if e % (g - 1) == wanted % (g - 1)]

    for group_a in range(g):
        for group_b in range(group_a + 1, g):
            from_a = endpoints_toward(group_a, group_b)
            from_b = endpoints_toward(group_b, group_a)
            for e_a, e_b in zip(from_a, from_b):
                u = group_a * a + e_a // h_global
                v = group_b * a + e_b // h_global
                if not graph.has_edge(u, v):
                    graph.add_edge(
                        Edge(u, v, WIRED, global_capacity_gbps, hop_latency_us)
                    )
    return graph


def add_random_shortcuts(
    graph: InterconnectGraph,
    count: int,
    seed: int,
    medium: str = WIRED,
    capacity_gbps: float = DEFAULT_WIRED_CAPACITY_GBPS,
    hop_latency_us: float = DEFAULT_HOP_LATENCY_US,
) -> InterconnectGraph:
    """Return a copy with ``count`` shortcut edges between non-adjacent pairs.

    Pairs are sampled uniformly without replacement by a generator seeded
    with ``seed``; identical seeds produce identical graphs.
    """
    if count < 0:
        raise ValueError("shortcut count must be non-negative")
    candidates = [
        (u, v)
        for u in range(graph.num_vertices)
        for v in range(u + 1, graph.num_vertices)
        if not graph.has_edge(u, v)
    ]
    if count > len(candidates):
        raise ValueError(
            f"requested {count} shortcuts but only {len(candidates)} "
            "non-adjacent pairs are available"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    chosen = rng.choice(len(candidates), size=count, replace=False)
    result = graph.copy()
    for idx in sorted(int(i) for i in chosen):
        u, v = candidates[idx]
        result.add_edge(Edge(u, v, medium, capacity_gbps, hop_latency_us))
    return result


def bfs_distances(graph: InterconnectGraph, source: int) -> List[int]:
    """Hop distances from ``source`` to every vertex; -1 when unreachable."""
    dist = [-1] * graph.num_vertices
    dist[source] = 0
    queue = deque([source])
    adjacency = graph._adjacency
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def connected_components(graph: InterconnectGraph) -> List[List[int]]:
    seen = [False] * graph.num_vertices
    components = []
    for start in range(graph.num_vertices):
        if seen[start]:
            continue
        comp = []
        queue = deque([start])
        seen[start] = True
        while queue:
            v = queue.popleft()
            comp.append(v)
            for w in graph._adjacency[v]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        components.append(sorted(comp))
    return components


@dataclass(frozen=True)
class PathMetrics:
    """All-pairs hop statistics of a connected graph.

    ``mean_hops`` averages over the full ordered-pair population (self pairs
    contribute zero), which is the convention under which a k-ary n-cube has
    mean n*k/4 for even k. ``mean_hops_distinct`` excludes self pairs.
    """

    mean_hops: float
    mean_hops_distinct: float
    diameter: int
    degree_histogram: Dict[int, int]
    distances: Tuple[Tuple[int, ...], ...]


def path_metrics(graph: InterconnectGraph) -> PathMetrics:
    """BFS all-pairs hop metrics; raises on disconnected graphs."""
    components = connected_components(graph)
    if len(components) > 1:
        raise ValueError(f"graph is disconnected; components: {components}")
    n = graph.num_vertices
    total = 0
    diameter = 0
    rows = []
    for source in range(n):
        dist = bfs_distances(graph, source)
        rows.append(tuple(dist))
        total += sum(dist)
        diameter = max(diameter, max(dist))
    histogram: Dict[int, int] = {}
    for v in range(n):
        d = graph.degree(v)
        histogram[d] = histogram.get(d, 0) + 1
    mean_distinct = total / (n * (n - 1)) if n > 1 else 0.0
    return PathMetrics(
        mean_hops=total / (n * n),
        mean_hops_distinct=mean_distinct,
        diameter=diameter,
        degree_histogram=histogram,
        distances=tuple(rows),
    )
