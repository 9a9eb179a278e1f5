"""Synthetic traffic, latency/utilization simulation, and the speedup model.

Traffic patterns are stand-ins for benchmark communication styles: solver
workloads exchange mainly with lattice neighbors, transform/sort workloads
reference all racks. Latency is hop count times a fixed per-hop delay (no
queueing); congestion is static shortest-path routing with even splitting
and uniform demand scaling to saturation.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError
from .topology import WIRED, Edge, InterconnectGraph, bfs_distances

Pair = Tuple[int, int]

NEIGHBOR = "neighbor"
ALLTOALL = "alltoall"
RANDOM_PERM = "random_perm"


@dataclass(frozen=True)
class TrafficMatrix:
    pattern: str
    demands: Tuple[Tuple[Pair, float], ...]  # ordered (pair, weight), weight > 0

    def total(self) -> float:
        return sum(w for _, w in self.demands)

    def scaled(self, factor: float) -> "TrafficMatrix":
        return TrafficMatrix(
            self.pattern, tuple((p, w * factor) for p, w in self.demands)
        )


def traffic_matrix(
    pattern: str, graph: InterconnectGraph, seed: int = 0
) -> TrafficMatrix:
    """Build a demand matrix over the graph's racks.

    neighbor:    unit demand on every ordered wired-adjacent pair
    alltoall:    unit demand on every ordered distinct pair
    random_perm: unit demand along a seeded fixed-point-free permutation
    """
    n = graph.num_vertices
    if n == 0:
        raise ValueError("graph is empty")
    if pattern == NEIGHBOR:
        entries = []
        for edge in graph.edges():
            if edge.medium == WIRED:
                entries.append(((edge.u, edge.v), 1.0))
                entries.append(((edge.v, edge.u), 1.0))
        entries.sort(key=lambda item: item[0])
        return TrafficMatrix(pattern, tuple(entries))
    if pattern == ALLTOALL:
        entries = [
            ((i, j), 1.0) for i in range(n) for j in range(n) if i != j
        ]
        return TrafficMatrix(pattern, tuple(entries))
    if pattern == RANDOM_PERM:
        rng = np.random.Generator(np.random.PCG64(seed))
        perm = rng.permutation(n)
        while n > 1 and (perm == np.arange(n)).any():
            perm = rng.permutation(n)
        entries = [((i, int(perm[i])), 1.0) for i in range(n) if int(perm[i]) != i]
        return TrafficMatrix(pattern, tuple(entries))
    raise ValueError(f"unknown traffic pattern {pattern!r}")


@dataclass(frozen=True)
class LatencyReport:
    mean_latency_us: float
    tail_latency_us: float
    mean_hops: float


def _latency_shortest(
    graph: InterconnectGraph, source: int
) -> Tuple[List[float], List[int]]:
    """Dijkstra by summed hop latency; hop count breaks latency ties."""
    n = graph.num_vertices
    best_latency = [float("inf")] * n
    best_hops = [0] * n
    min_latency: Dict[Tuple[int, int], float] = {}
    for edge in graph.edges():
        for u, v in ((edge.u, edge.v), (edge.v, edge.u)):
            key = (u, v)
            if key not in min_latency or edge.hop_latency_us < min_latency[key]:
                min_latency[key] = edge.hop_latency_us
    best_latency[source] = 0.0
    heap = [(0.0, 0, source)]
    settled = [False] * n
    while heap:
        lat, hops, v = heapq.heappop(heap)
        if settled[v]:
            continue
        settled[v] = True
        best_hops[v] = hops
        for w in graph.neighbors(v):
            cand = lat + min_latency[(v, w)]
            if cand < best_latency[w] - 1e-15:
                best_latency[w] = cand
                heapq.heappush(heap, (cand, hops + 1, w))
            elif abs(cand - best_latency[w]) <= 1e-15 and not settled[w]:
                heapq.heappush(heap, (cand, hops + 1, w))
    return best_latency, best_hops


def simulate_latency(graph: InterconnectGraph, traffic: TrafficMatrix) -> LatencyReport:
    """Demand-weighted shortest-path latency over the traffic matrix.

    The all-to-all pattern reports population means over all N^2 ordered
    pairs (self pairs contribute zero), the convention under which the k-ary
    3-cube baseline lands exactly on its n*k/4 closed form; weighted patterns
    divide by their total demand.
    """
    n = graph.num_vertices
    sources = sorted({src for (src, _), _ in traffic.demands})
    latency_rows: Dict[int, List[float]] = {}
    hops_rows: Dict[int, List[int]] = {}
    for src in sources:
        latency_rows[src], hops_rows[src] = _latency_shortest(graph, src)

    weighted_latency = 0.0
    weighted_hops = 0.0
    tail = 0.0
    for (src, dst), weight in traffic.demands:
        lat = latency_rows[src][dst]
        if lat == float("inf"):
            raise ValueError(f"demanded pair ({src}, {dst}) is unreachable")
        weighted_latency += weight * lat
        weighted_hops += weight * hops_rows[src][dst]
        tail = max(tail, lat)

    divisor = float(n * n) if traffic.pattern == ALLTOALL else traffic.total()
    return LatencyReport(
        mean_latency_us=weighted_latency / divisor,
        tail_latency_us=tail,
        mean_hops=weighted_hops / divisor,
    )


@dataclass(frozen=True)
class UtilizationReport:
    link_loads: Tuple[Tuple[Tuple[int, int, str], float], ...]  # unscaled loads
    lambda_star: float
    utilization_efficiency: float


def _shortest_path_loads(
    graph: InterconnectGraph, traffic: TrafficMatrix
) -> Dict[Tuple[int, int, str], float]:
    """Per-edge load from even splitting over all shortest hop paths.

    Every shortest path of a pair carries an equal demand share; parallel
    edges between a vertex pair count as distinct paths. Load on an
    undirected edge sums both directions.
    """
    loads: Dict[Tuple[int, int, str], float] = {e.key(): 0.0 for e in graph.edges()}
    edges_between: Dict[Tuple[int, int], List[Edge]] = {}
    for e in graph.edges():
        for u, v in ((e.u, e.v), (e.v, e.u)):
            edges_between.setdefault((u, v), []).append(e)

    demand_by_source: Dict[int, Dict[int, float]] = {}
    for (src, dst), w in traffic.demands:
        demand_by_source.setdefault(src, {})[dst] = (
            demand_by_source.get(src, {}).get(dst, 0.0) + w
        )

    for src, dests in demand_by_source.items():
        dist = bfs_distances(graph, src)
        for dst in dests:
            if dist[dst] < 0:
                raise ValueError(f"demanded pair ({src}, {dst}) is unreachable")
        # Path counts with edge multiplicity, in increasing distance order.
        order = sorted(range(graph.num_vertices), key=lambda v: dist[v])
        sigma = [0.0] * graph.num_vertices
        sigma[src] = 1.0
        for v in order:
            if v == src or dist[v] < 0:
                continue
            total = 0.0
            for u in graph.neighbors(v):
                if dist[u] == dist[v] - 1:
                    total += sigma[u] * graph.multiplicity(u, v)
            sigma[v] = total
        # carry[v]: demand that still has to flow from src through v.
        carry = [0.0] * graph.num_vertices
        for dst, w in dests.items():
            carry[dst] += w
        for v in sorted(
            range(graph.num_vertices), key=lambda u: dist[u], reverse=True
        ):
            if v == src or carry[v] == 0.0 or dist[v] < 0:
                continue
            for u in graph.neighbors(v):
                if dist[u] != dist[v] - 1:
                    continue
                parallel = edges_between[(u, v)]
                share = carry[v] * sigma[u] * len(parallel) / sigma[v]
                for edge in parallel:
                    loads[edge.key()] += share / len(parallel)
                carry[u] += share
    return loads


def link_utilization(
    graph: InterconnectGraph, traffic: TrafficMatrix
) -> UtilizationReport:
    """Scale demand until the most loaded link saturates; report mean use.

    lambda* is the uniform demand scale at which max(load/capacity) = 1; the
    utilization efficiency is the mean over links of load/capacity at that
    scale.
    """
    for edge in graph.edges():
        if edge.capacity_gbps <= 0:
            raise ConfigurationError(f"zero-capacity edge {edge.key()}")
    loads = _shortest_path_loads(graph, traffic)
    ratios = {
        key: loads[key] / edge.capacity_gbps
        for key, edge in ((e.key(), e) for e in graph.edges())
    }
    worst = max(ratios.values())
    if worst <= 0:
        raise ValueError("traffic produces no load on any link")
    lambda_star = 1.0 / worst
    efficiency = float(np.mean([r * lambda_star for r in ratios.values()]))
    ordered = tuple(sorted(loads.items()))
    return UtilizationReport(
        link_loads=ordered,
        lambda_star=lambda_star,
        utilization_efficiency=efficiency,
    )


def mean_data_rate_gbps(graph: InterconnectGraph, traffic: TrafficMatrix) -> float:
    """Demand-weighted mean of the best bottleneck capacity over shortest
    hop paths, a proxy for the achievable inter-rack data rate."""
    best_cap: Dict[Pair, float] = {}
    for edge in graph.edges():
        for u, v in ((edge.u, edge.v), (edge.v, edge.u)):
            best_cap[(u, v)] = max(best_cap.get((u, v), 0.0), edge.capacity_gbps)
    by_source: Dict[int, List[Tuple[int, float]]] = {}
    for (src, dst), w in traffic.demands:
        by_source.setdefault(src, []).append((dst, w))
    total, weight_sum = 0.0, 0.0
    for src, dests in by_source.items():
        dist = bfs_distances(graph, src)
        order = sorted(range(graph.num_vertices), key=lambda v: dist[v])
        bottleneck = [0.0] * graph.num_vertices
        bottleneck[src] = float("inf")
        for v in order:
            if v == src or dist[v] < 0:
                continue
            best = 0.0
            for u in graph.neighbors(v):
                if dist[u] == dist[v] - 1:
                    best = max(best, min(bottleneck[u], best_cap[(u, v)]))
            bottleneck[v] = best
        for dst, w in dests:
            if dist[dst] < 0:
                raise ValueError(f"demanded pair ({src}, {dst}) is unreachable")
            total += w * bottleneck[dst]
            weight_sum += w
    return total / weight_sum if weight_sum else 0.0


@dataclass(frozen=True)
class FractionPoint:
    """Result of one wired-to-wireless substitution scenario."""

    fraction: float
    requested: int
    deployed: int
    collision_fraction: float  # share of requests ruled out by conflicts
    mean_wireless_capacity_gbps: Optional[float]
    graph: InterconnectGraph
    wired_remnant: InterconnectGraph


def wireless_fraction_point(
    baseline: InterconnectGraph,
    layout,
    fraction: float,
    spec,
    rng: np.random.Generator,
    hop_latency_us: float = 0.6,
) -> FractionPoint:
    """Replace ``fraction`` of wired links with wireless ones.

    The selected wired links are removed and re-requested as wireless links
    between the same rack pairs through the best-effort panel protocol;
    requests the protocol cannot place without beam conflicts are discarded,
    so the total connection count never exceeds the baseline's.
    ``wired_remnant`` is the graph using only the surviving wired links.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must lie in [0, 1), got {fraction}")
    from . import coordination  # deferred: coordination builds on this module's peers

    wired = [e for e in baseline.edges() if e.medium == WIRED]
    count = round(fraction * len(wired))
    if count == 0:
        return FractionPoint(fraction, 0, 0, 0.0, None, baseline.copy(), baseline.copy())
    chosen_idx = sorted(int(i) for i in rng.choice(len(wired), size=count, replace=False))
    chosen = [wired[i] for i in chosen_idx]
    remnant = baseline.copy()
    for edge in chosen:
        remnant.remove_edge(edge.u, edge.v, WIRED)
    requests = [(edge.u, edge.v) for edge in chosen]
    assignment = coordination.assign_panels(requests, layout, spec)
    mixed = coordination.deploy(remnant, requests, assignment, hop_latency_us)
    successful = assignment.successful()
    mean_cap = (
        float(np.mean([link.capacity_bps for link in successful])) / 1e9
        if successful
        else None
    )
    return FractionPoint(
        fraction=fraction,
        requested=count,
        deployed=len(successful),
        collision_fraction=(count - len(successful)) / count,
        mean_wireless_capacity_gbps=mean_cap,
        graph=mixed,
        wired_remnant=remnant,
    )


def wireless_fraction_sweep(
    baseline: InterconnectGraph,
    layout,
    fractions: Sequence[float],
    traffic: TrafficMatrix,
    spec,
    seed: int,
    hop_latency_us: float = 0.6,
) -> List[Dict[str, object]]:
    """Evaluate utilization and data rate across wireless fractions.

    The total connection budget is held at the baseline's edge count; each
    point is seeded independently so points are reproducible in isolation.
    Infeasible points are returned with a failure flag instead of raising.
    """
    points: List[Dict[str, object]] = []
    for index, fraction in enumerate(sorted(fractions)):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((seed, 2, index)))
        )
        try:
            point = wireless_fraction_point(
                baseline, layout, fraction, spec, rng, hop_latency_us
            )
            mixed = link_utilization(point.graph, traffic)
            wired_only = link_utilization(point.wired_remnant, traffic)
            points.append(
                {
                    "fraction": fraction,
                    "deployed": point.deployed,
                    "collision_fraction": point.collision_fraction,
                    "mean_wireless_capacity_gbps": point.mean_wireless_capacity_gbps,
                    "utilization_efficiency": mixed.utilization_efficiency,
                    "wired_only_efficiency": wired_only.utilization_efficiency,
                    "mean_data_rate_gbps": mean_data_rate_gbps(point.graph, traffic),
                    "status": "ok",
                }
            )
        except ValueError as exc:
            points.append({"fraction": fraction, "status": f"infeasible: {exc}"})
    return points


@dataclass(frozen=True)
class SpeedupModel:
    """Single-parameter completion-time model T = T_compute + alpha * hops.

    ``compute_ratio`` is T_compute / alpha; 0.27 fits both pilot data points
    (3 -> 2.87 and 3 -> 2.67 hops) to within a quarter percentage point.
    """

    compute_ratio: float = 0.27
    baseline_flops: float = 0.85e9

    def __post_init__(self) -> None:
        if self.compute_ratio < 0:
            raise ValueError("compute_ratio must be non-negative")


def benchmark_speedup(h_base: float, h_new: float, model: SpeedupModel) -> float:
    """Speedup factor (c + h_base) / (c + h_new) of a hop-count change."""
    if h_base <= 0 or h_new <= 0:
        raise ValueError("hop counts must be positive")
    return (model.compute_ratio + h_base) / (model.compute_ratio + h_new)


def extrapolate_flops(baseline_flops: float, speedup: float) -> float:
    """Project a measured benchmark rate through a speedup factor."""
    if baseline_flops <= 0:
        raise ValueError("baseline FLOPS must be positive")
    if speedup <= 0:
        raise ValueError("speedup must be positive")
    return baseline_flops * speedup
