"""Wireless link planning and deployment on top of a wired baseline.

Plans choose rack pairs (dispersed spreads links among nearby racks,
cohesive concentrates them on hub racks), the best-effort protocol maps each
requested pair onto a direct beam or a ceiling panel without beam conflicts,
and deployment grafts the achieved links onto the interconnect graph.

Planning and classification are pure; ``assign_panels`` is order-dependent
by design and must process one scenario single-threaded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from . import channel, geometry
from .errors import ConfigurationError
from .geometry import Layout, WirelessPath
from .topology import RWINE, SWINE, Edge, InterconnectGraph, bfs_distances

Pair = Tuple[int, int]

DISPERSED_CV_THRESHOLD = 0.05
COHESIVE_CV_THRESHOLD = 0.25


def _all_distances(graph: InterconnectGraph) -> List[List[int]]:
    return [bfs_distances(graph, v) for v in range(graph.num_vertices)]


def plan_dispersed(graph: InterconnectGraph, budget: int) -> List[Pair]:
    """Pick ``budget`` pairs at wired distance 2 (then 3), evenly spread.

    Racks are visited round-robin in id order; a rack initiates a link only
    while its wireless degree matches the current pass, and partners are
    chosen with the lowest wireless degree (ties by id), which keeps
    max degree - min degree <= 1 whenever the candidate pool allows it.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if budget == 0:
        return []
    n = graph.num_vertices
    dist = _all_distances(graph)
    plan: List[Pair] = []
    linked: Set[Pair] = set()
    degree = [0] * n

    for target in (2, 3):
        for round_index in range(n):
            if len(plan) == budget:
                break
            progress = False
            for rack in range(n):
                if len(plan) == budget:
                    break
                if degree[rack] != round_index:
                    continue
                best: Optional[int] = None
                for other in range(n):
                    if dist[rack][other] != target:
                        continue
                    key = (min(rack, other), max(rack, other))
                    if key in linked:
                        continue
                    if best is None or (degree[other], other) < (degree[best], best):
                        best = other
                if best is None:
                    continue
                key = (min(rack, best), max(rack, best))
                linked.add(key)
                plan.append(key)
                degree[rack] += 1
                degree[best] += 1
                progress = True
            if not progress:
                break
        if len(plan) == budget:
            break
    return plan


def _select_hubs(dist: List[List[int]], n: int, hub_count: int) -> List[int]:
    # Greedy farthest-point over the wired metric, ties by lowest id.
    hubs = [0]
    while len(hubs) < hub_count:
        best, best_score = None, -1
        for v in range(n):
            if v in hubs:
                continue
            score = min(dist[h][v] for h in hubs)
            if score > best_score:
                best, best_score = v, score
        hubs.append(best)
    return hubs


def plan_cohesive(
    graph: InterconnectGraph, budget: int, hub_count: int
) -> List[Pair]:
    """Concentrate wireless links on hub racks.

    Hubs maximize pairwise wired distance (greedy farthest-point), are
    connected pairwise, and the remaining budget connects each hub
    round-robin to its farthest non-neighbor racks.
    """
    n = graph.num_vertices
    if hub_count < 1 or hub_count > n:
        raise ValueError(f"hub_count must lie in 1..{n}")
    if budget < hub_count:
        raise ValueError("budget must be at least hub_count")
    clique_edges = hub_count * (hub_count - 1) // 2
    if clique_edges > budget:
        raise ConfigurationError(
            f"infeasible budget split: {hub_count} hubs need {clique_edges} "
            f"hub-to-hub links but budget is {budget}"
        )
    dist = _all_distances(graph)
    hubs = _select_hubs(dist, n, hub_count)

    plan: List[Pair] = []
    linked: Set[Pair] = set()
    for i in range(hub_count):
        for j in range(i + 1, hub_count):
            key = (min(hubs[i], hubs[j]), max(hubs[i], hubs[j]))
            if key not in linked:
                linked.add(key)
                plan.append(key)

    # Spend the rest on spokes: each hub grabs its farthest non-neighbor.
    exhausted: Set[int] = set()
    while len(plan) < budget and len(exhausted) < hub_count:
        for hub in hubs:
            if len(plan) == budget:
                break
            if hub in exhausted:
                continue
            best, best_score = None, -1
            for v in range(n):
                if v == hub or graph.has_edge(hub, v):
                    continue
                key = (min(hub, v), max(hub, v))
                if key in linked:
                    continue
                if dist[hub][v] > best_score:
                    best, best_score = v, dist[hub][v]
            if best is None:
                exhausted.add(hub)
                continue
            key = (min(hub, best), max(hub, best))
            linked.add(key)
            plan.append(key)
    if len(plan) < budget:
        raise ConfigurationError(
            f"budget {budget} cannot be met: only {len(plan)} candidate links"
        )
    return plan


@dataclass(frozen=True)
class LinkAssignment:
    src: int
    dst: int
    status: str  # "s-WINE" | "r-WINE" | "failed"
    panel_index: Optional[int]
    capacity_bps: float
    path: Optional[WirelessPath]


@dataclass(frozen=True)
class PanelAssignment:
    """Outcome of the best-effort protocol for an ordered request list."""

    links: Tuple[LinkAssignment, ...]

    def by_pair(self) -> Dict[Pair, LinkAssignment]:
        return {(a.src, a.dst): a for a in self.links}

    def successful(self) -> List[LinkAssignment]:
        return [a for a in self.links if a.status != "failed"]


class _CommittedBeams:
    """Incrementally grown set of beam segments for conflict checks."""

    def __init__(self) -> None:
        self.starts: List[np.ndarray] = []
        self.ends: List[np.ndarray] = []
        self.tans: List[float] = []
        self.racks: List[Set[int]] = []

    def conflicts(self, path: WirelessPath, divergence: float) -> bool:
        if not self.starts:
            return False
        tan_new = math.tan(divergence / 2.0)
        s2 = np.asarray(self.starts)
        e2 = np.asarray(self.ends)
        tan2 = np.asarray(self.tans)
        share = np.array(
            [bool(r & {path.src, path.dst}) for r in self.racks], dtype=bool
        )
        for seg in path.segments:
            p = np.asarray(seg[0])
            q = np.asarray(seg[1])
            dist, t1, t2 = _segment_vs_many(p, q, s2, e2)
            r_new = tan_new * t1 * float(np.linalg.norm(q - p))
            r_old = tan2 * t2 * np.linalg.norm(e2 - s2, axis=1)
            hit = (dist < r_new + r_old) & ~share
            if hit.any():
                return True
        return False

    def commit(self, path: WirelessPath, divergence: float) -> None:
        tan_half = math.tan(divergence / 2.0)
        for seg in path.segments:
            self.starts.append(np.asarray(seg[0]))
            self.ends.append(np.asarray(seg[1]))
            self.tans.append(tan_half)
            self.racks.append({path.src, path.dst})


def _segment_vs_many(
    p: np.ndarray, q: np.ndarray, starts: np.ndarray, ends: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closest approach of one segment against many; returns (dist, t_one, t_many)."""
    d1 = q - p
    d2 = ends - starts
    r = p - starts
    a = float(d1 @ d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = r @ d1
    b = d2 @ d1
    denom = a * e - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 1e-18, (b * f - c * e) / denom, 0.0)
        s = np.clip(s, 0.0, 1.0)
        t = np.where(e > 1e-18, (b * s + f) / e, 0.0)
        s_low = np.clip(np.where(a > 1e-18, -c / a, 0.0), 0.0, 1.0)
        s_high = np.clip(np.where(a > 1e-18, (b - c) / a, 0.0), 0.0, 1.0)
    s = np.where(t < 0.0, s_low, np.where(t > 1.0, s_high, s))
    t = np.clip(t, 0.0, 1.0)
    if a < 1e-18:
        s = np.zeros_like(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.clip(np.where(e > 1e-18, f / e, 0.0), 0.0, 1.0)
    near1 = p + s[:, None] * d1
    near2 = starts + t[:, None] * d2
    dist = np.linalg.norm(near1 - near2, axis=1)
    return dist, s, t


def assign_panels(
    requests: Sequence[Pair], layout: Layout, spec: channel.LinkSpec
) -> PanelAssignment:
    """Best-effort protocol: direct beam first, else best conflict-free panel.

    Requests are processed in list order. A request prefers an unobstructed
    direct link whose beam does not conflict with already-committed beams;
    otherwise it takes the highest-capacity free panel whose two beam legs
    are conflict-free (ties to the lowest panel index); otherwise it fails.
    The committed set only grows, so earlier requests are never revoked.
    """
    divergence = channel.beam_divergence(spec)
    committed = _CommittedBeams()
    used_panels: Set[int] = set()
    results: List[LinkAssignment] = []

    for src, dst in requests:
        direct = geometry.swine_path(layout, src, dst)
        if direct is not None and not committed.conflicts(direct, divergence):
            capacity = channel.link_budget(spec, direct.total_length).capacity_bps
            committed.commit(direct, divergence)
            results.append(
                LinkAssignment(src, dst, SWINE, None, capacity, direct)
            )
            continue

        assigned = None
        for panel, capacity in geometry.panel_candidates(layout, src, dst, spec):
            if panel in used_panels:
                continue
            path = geometry.rwine_path(layout, src, dst, panel)
            if path is None:
                continue
            if committed.conflicts(path, divergence):
                continue
            assigned = LinkAssignment(src, dst, RWINE, panel, capacity, path)
            used_panels.add(panel)
            committed.commit(path, divergence)
            break
        results.append(
            assigned
            if assigned is not None
            else LinkAssignment(src, dst, "failed", None, 0.0, None)
        )
    return PanelAssignment(tuple(results))


def deploy(
    graph: InterconnectGraph,
    plan: Sequence[Pair],
    assignment: PanelAssignment,
    hop_latency_us: float = 0.6,
) -> InterconnectGraph:
    """Graft achieved wireless links onto a copy of the baseline graph.

    Each successful assignment becomes one wireless edge carrying its
    achieved capacity and the wired single-hop latency; failed links add
    nothing.
    """
    table = assignment.by_pair()
    missing = [pair for pair in plan if pair not in table]
    if missing:
        raise ValueError(f"plan pairs missing from assignment: {missing}")
    result = graph.copy()
    for pair in plan:
        link = table[pair]
        if link.status == "failed":
            continue
        result.add_edge(
            Edge(
                link.src,
                link.dst,
                link.status,
                link.capacity_bps / 1e9,
                hop_latency_us,
            )
        )
    return result


def classify_state(
    graph: InterconnectGraph,
    dispersed_cv: float = DISPERSED_CV_THRESHOLD,
    cohesive_cv: float = COHESIVE_CV_THRESHOLD,
) -> str:
    """Classify a deployed interconnect by its degree dispersion.

    Uses the coefficient of variation of total vertex degree: below
    ``dispersed_cv`` the layout is dispersed, above ``cohesive_cv`` cohesive,
    otherwise mixed.
    """
    wireless = [e for e in graph.edges() if e.medium != "wired"]
    if not wireless:
        raise ValueError("nothing to classify: graph has no wireless edges")
    degrees = np.array([graph.degree(v) for v in range(graph.num_vertices)], float)
    mean = degrees.mean()
    cv = degrees.std() / mean
    if cv < dispersed_cv:
        return "dispersed"
    if cv > cohesive_cv:
        return "cohesive"
    return "mixed"
