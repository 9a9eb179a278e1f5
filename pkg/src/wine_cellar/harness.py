"""Experiment pipelines: reference link-budget table, reflector-density
sweep, coordination sweep, and deterministic report emission.

Every sweep row is derived from (config, seed) alone: per-row random streams
are seeded from the row's own parameters, so rows are independently
recomputable and the report is byte-identical across reruns.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__, channel, coordination, geometry, topology, workload
from .config import ScenarioConfig
from .errors import ConfigurationError

LINKBUDGET_COLUMNS = [
    "link_type",
    "frequency_hz",
    "bandwidth_hz",
    "distance_m",
    "loss_db",
    "noise_dbm",
    "snr_db",
    "capacity_gbps",
]

IRS_COLUMNS = [
    "height_m",
    "d_irs_m",
    "panels",
    "requests",
    "assigned",
    "collision_fraction",
    "mean_rwine_throughput_gbps",
    "mean_latency_us",
    "utilization_efficiency",
    "speedup",
    "status",
]

COORDINATION_COLUMNS = [
    "k",
    "state",
    "pattern",
    "wireless_fraction",
    "wireless_links",
    "collision_fraction",
    "mean_rwine_throughput_gbps",
    "mean_hops",
    "mean_latency_us",
    "tail_latency_us",
    "utilization_efficiency",
    "wired_only_efficiency",
    "mean_data_rate_gbps",
    "speedup",
    "status",
]

LAYOUT_COLUMNS = ["id", "x", "y", "z", "kind"]

ASSIGNMENT_COLUMNS = ["src", "dst", "medium", "panel_id", "capacity_gbps", "status"]


@dataclass(frozen=True)
class SweepReport:
    kind: str
    columns: Tuple[str, ...]
    rows: Tuple[Dict[str, Any], ...]
    metadata: Dict[str, Any]


def _metadata(config: ScenarioConfig) -> Dict[str, Any]:
    return {
        "seed": config.seed,
        "config_digest": config.digest(),
        "tool_version": __version__,
    }


def _row_rng(config: ScenarioConfig, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence((config.seed,) + tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


# ---------------------------------------------------------------------------
# reference link-budget table


def run_linkbudget_table(config: ScenarioConfig) -> SweepReport:
    """Evaluate the four reference columns (THz/FSO at near/far distance)."""
    ch = config.data["channel"]
    near = ch["near_distance_m"]
    far = ch["far_distance_m"]
    thz = config.thz_spec()
    fso = config.fso_spec()
    cases = [
        ("thz_near", thz, near, None),
        ("thz_far", thz, far, ch["thz_far_atmospheric_db"]),
        ("fso_near", fso, near, None),
        ("fso_far", fso, far, None),
    ]
    rows = []
    for name, spec, distance, atmospheric in cases:
        result = channel.link_budget(spec, distance, atmospheric_loss_db=atmospheric)
        rows.append(
            {
                "link_type": name,
                "frequency_hz": spec.carrier_frequency_hz,
                "bandwidth_hz": spec.bandwidth_hz,
                "distance_m": distance,
                "loss_db": result.propagation_or_geometric_loss_db,
                "noise_dbm": result.noise_power_dbm,
                "snr_db": result.snr_db,
                "capacity_gbps": result.capacity_bps / 1e9,
            }
        )
    metadata = _metadata(config)
    if thz.misc_loss_db == 0 or fso.misc_loss_db == 0:
        metadata["calibration"] = "uncalibrated"
    return SweepReport("linkbudget", tuple(LINKBUDGET_COLUMNS), tuple(rows), metadata)


def layout_rows(config: ScenarioConfig) -> SweepReport:
    """Dump rack, transceiver and panel positions of the configured layout."""
    layout = config.build_layout()
    rows: List[Dict[str, Any]] = []
    for rack in range(layout.num_racks):
        x, y = layout.mount_points[rack][:2]
        rows.append({"id": rack, "x": x, "y": y, "z": 0.0, "kind": "rack"})
    for rack in range(layout.num_racks):
        x, y, z = layout.mount_points[rack]
        rows.append({"id": rack, "x": x, "y": y, "z": z, "kind": "transceiver"})
    for panel in range(layout.num_panels):
        x, y, z = layout.panel_points[panel]
        rows.append({"id": panel, "x": x, "y": y, "z": z, "kind": "panel"})
    return SweepReport("layout", tuple(LAYOUT_COLUMNS), tuple(rows), _metadata(config))


# ---------------------------------------------------------------------------
# reflector-density sweep


def _vector_capacities(spec: channel.LinkSpec, lengths: np.ndarray) -> np.ndarray:
    """Vectorized capacity chain; must agree with channel.link_budget."""
    if isinstance(spec, channel.ThzSpec):
        loss = 20.0 * np.log10(
            4.0 * np.pi * lengths * spec.carrier_frequency_hz / channel.SPEED_OF_LIGHT
        )
        gain = 2.0 * channel.array_gain(spec.elements_per_side, spec.element_gain_dbi)
        noise = channel.thermal_noise_power(spec.bandwidth_hz, spec.noise_figure_db)
        snr = (
            spec.tx_power_dbm
            + gain
            - loss
            - spec.atmospheric_attenuation_db_per_m * lengths
            - spec.misc_loss_db
            - noise
        )
    else:
        spot = spec.lens_diameter_m + 2.0 * spec.divergence_half_angle_rad * lengths
        loss = 20.0 * np.log10(spot / spec.lens_diameter_m)
        snr = (
            spec.tx_power_dbm
            - loss
            - spec.pointing_loss_db
            - spec.misc_loss_db
            - spec.noise_power_override_dbm
        )
    capacity = spec.bandwidth_hz * np.log2(1.0 + 10.0 ** (snr / 10.0))
    if spec.max_spectral_efficiency is not None:
        capacity = np.minimum(
            capacity, spec.bandwidth_hz * spec.max_spectral_efficiency
        )
    return capacity


def _sample_pairs(rng: np.random.Generator, num_racks: int, count: int) -> List[Tuple[int, int]]:
    total = num_racks * (num_racks - 1) // 2
    chosen = rng.choice(total, size=min(count, total), replace=False)
    pairs = []
    for flat in chosen:
        # decode the row-major upper-triangle index
        i = int(num_racks - 2 - math.floor(
            math.sqrt(-8 * int(flat) + 4 * num_racks * (num_racks - 1) - 7) / 2 - 0.5
        ))
        j = int(flat + i + 1 - num_racks * (num_racks - 1) // 2
                + (num_racks - i) * (num_racks - i - 1) // 2)
        pairs.append((i, j))
    return pairs


def _irs_point(
    config: ScenarioConfig,
    layout: geometry.Layout,
    spec: channel.LinkSpec,
    rng: np.random.Generator,
) -> Tuple[float, float, int]:
    """One reflector-sweep scenario: a full-load snapshot of reflected links.

    The demand is one request per rack (seeded uniform rack pairs), so a
    sparse panel grid cannot serve every request while a dense grid can.
    Each request greedily takes the unblocked free panel with the highest
    end-to-end capacity; collisions are then detected over all placed beams
    and conflicting links are ruled out. Returns (collision fraction over
    placed paths, mean deliverable throughput per requested slot in bps
    with ruled-out and unserved links contributing zero, placed links).
    """
    panels = layout.panel_points
    num_requests = layout.num_racks
    pairs = _sample_pairs(rng, layout.num_racks, num_requests)
    divergence = channel.beam_divergence(spec)

    free = np.ones(layout.num_panels, dtype=bool)
    placed: List[Tuple[geometry.WirelessPath, float]] = []
    capacities: List[float] = []
    for src, dst in pairs:
        a = layout.mount(src)
        b = layout.mount(dst)
        lengths = (
            np.linalg.norm(panels - a, axis=1) + np.linalg.norm(panels - b, axis=1)
        )
        caps = _vector_capacities(spec, lengths)
        order = np.lexsort((np.arange(len(caps)), -caps))
        chosen = None
        for panel in order:
            if not free[panel]:
                continue
            path = geometry.rwine_path(layout, src, dst, int(panel))
            if path is None:
                continue
            chosen = (int(panel), float(caps[panel]), path)
            break
        if chosen is None:
            continue
        panel, cap, path = chosen
        free[panel] = False
        placed.append((path, divergence))
        capacities.append(cap)

    report = geometry.detect_collisions(placed)
    collided = {i for pair in report.conflicts for i in pair}
    surviving = sum(
        cap for idx, cap in enumerate(capacities) if idx not in collided
    )
    mean_throughput = surviving / num_requests if num_requests else 0.0
    return report.proportion, mean_throughput, len(placed)


def run_irs_sweep(config: ScenarioConfig) -> SweepReport:
    """Sweep reflector spacing and room height; trade interference against
    panel availability."""
    sweeps = config.data["sweeps"]
    heights = sweeps["heights_m"]
    spacings = sweeps["d_irs_m"]
    if not heights or not spacings:
        raise ConfigurationError("sweep lists heights_m and d_irs_m must be nonempty")
    replicates = int(sweeps["irs_replicates"])
    spec = config.wireless_spec(sweeps["irs_channel"])

    rows = []
    for hi, height in enumerate(heights):
        for di, spacing in enumerate(spacings):
            try:
                layout = config.build_layout(height=height, spacing=spacing)
            except ConfigurationError as exc:
                rows.append(_irs_row(height, spacing, status=f"infeasible: {exc}"))
                continue
            collisions, throughputs, assigned = [], [], []
            for rep in range(replicates):
                rng = _row_rng(config, 1, hi, di, rep)
                frac, mean_bps, placed = _irs_point(config, layout, spec, rng)
                collisions.append(frac)
                throughputs.append(mean_bps)
                assigned.append(placed)
            rows.append(
                _irs_row(
                    height,
                    spacing,
                    panels=layout.num_panels,
                    requests=layout.num_racks,
                    assigned=float(np.mean(assigned)),
                    collision_fraction=float(np.mean(collisions)),
                    mean_rwine_throughput_gbps=float(np.mean(throughputs)) / 1e9,
                    status="ok",
                )
            )
    return SweepReport("irs", tuple(IRS_COLUMNS), tuple(rows), _metadata(config))


def _irs_row(height: float, spacing: float, **values: Any) -> Dict[str, Any]:
    row: Dict[str, Any] = {column: None for column in IRS_COLUMNS}
    row.update({"height_m": height, "d_irs_m": spacing, "status": values.pop("status", "ok")})
    row.update(values)
    return row


# ---------------------------------------------------------------------------
# coordination sweep


def _coordination_row(**values: Any) -> Dict[str, Any]:
    row: Dict[str, Any] = {column: None for column in COORDINATION_COLUMNS}
    row.update(values)
    row.setdefault("status", "ok")
    if row["status"] is None:
        row["status"] = "ok"
    return row


def run_coordination_sweep(config: ScenarioConfig) -> SweepReport:
    """Baseline/dispersed/cohesive metrics per torus scale, plus the
    wired-vs-wireless fraction sweep."""
    sweeps = config.data["sweeps"]
    k_values = sweeps["k_values"]
    if not k_values:
        raise ConfigurationError("sweep list k_values must be nonempty")
    topo = config.data["topology"]
    patterns = config.data["workload"]["patterns"]
    model = workload.SpeedupModel(
        compute_ratio=config.data["workload"]["compute_ratio"],
        baseline_flops=config.data["workload"]["baseline_flops"],
    )
    spec = config.wireless_spec()
    hop_latency = topo["hop_latency_us"]

    rows: List[Dict[str, Any]] = []
    for k in k_values:
        baseline = topology.build_torus(
            k, topo["n"], topo["wired_capacity_gbps"], hop_latency
        )
        layout = config.scaled_layout(baseline.num_vertices)
        base_metrics = topology.path_metrics(baseline)
        h_base = base_metrics.mean_hops

        defaults = config.coordination_defaults(k)
        deployments: Dict[str, Tuple[topology.InterconnectGraph, Dict[str, Any]]] = {
            "baseline": (baseline, {"wireless_links": 0, "collision_fraction": 0.0}),
        }
        for state in ("dispersed", "cohesive"):
            try:
                if state == "dispersed":
                    plan = coordination.plan_dispersed(
                        baseline, defaults["dispersed_budget"]
                    )
                else:
                    plan = coordination.plan_cohesive(
                        baseline, defaults["cohesive_budget"], defaults["hub_count"]
                    )
                assignment = coordination.assign_panels(plan, layout, spec)
                deployed = coordination.deploy(baseline, plan, assignment, hop_latency)
                successful = assignment.successful()
                info = {
                    "wireless_links": len(successful),
                    "collision_fraction": 0.0,
                    "mean_rwine_throughput_gbps": (
                        float(np.mean([l.capacity_bps for l in successful])) / 1e9
                        if successful
                        else None
                    ),
                }
                deployments[state] = (deployed, info)
            except (ConfigurationError, ValueError) as exc:
                rows.append(
                    _coordination_row(k=k, state=state, status=f"error: {exc}")
                )

        for state, (graph, info) in deployments.items():
            metrics = topology.path_metrics(graph)
            speedup = workload.benchmark_speedup(h_base, metrics.mean_hops, model)
            for pattern in patterns:
                traffic = workload.traffic_matrix(pattern, graph, seed=config.seed)
                latency = workload.simulate_latency(graph, traffic)
                utilization = workload.link_utilization(graph, traffic)
                rows.append(
                    _coordination_row(
                        k=k,
                        state=state,
                        pattern=pattern,
                        mean_hops=metrics.mean_hops,
                        mean_latency_us=latency.mean_latency_us,
                        tail_latency_us=latency.tail_latency_us,
                        utilization_efficiency=utilization.utilization_efficiency,
                        mean_data_rate_gbps=workload.mean_data_rate_gbps(graph, traffic),
                        speedup=speedup,
                        **info,
                    )
                )

    for k in sweeps["fraction_k_values"]:
        rows.extend(_fraction_rows(config, k, spec, model))
    return SweepReport(
        "coordination", tuple(COORDINATION_COLUMNS), tuple(rows), _metadata(config)
    )


def _fraction_rows(
    config: ScenarioConfig,
    k: int,
    spec: channel.LinkSpec,
    model: workload.SpeedupModel,
) -> List[Dict[str, Any]]:
    topo = config.data["topology"]
    hop_latency = topo["hop_latency_us"]
    baseline = topology.build_torus(k, topo["n"], topo["wired_capacity_gbps"], hop_latency)
    layout = config.scaled_layout(baseline.num_vertices)
    fractions = config.data["sweeps"]["wireless_fractions"]
    rows = []
    for fi, fraction in enumerate(fractions):
        rng = _row_rng(config, 2, k, fi)
        try:
            point = workload.wireless_fraction_point(
                baseline, layout, fraction, spec, rng, hop_latency
            )
        except ValueError as exc:
            rows.append(
                _coordination_row(
                    k=k,
                    state="wireless_fraction",
                    wireless_fraction=fraction,
                    status=f"infeasible: {exc}",
                )
            )
            continue
        traffic = workload.traffic_matrix(workload.ALLTOALL, point.graph)
        utilization = workload.link_utilization(point.graph, traffic)
        wired_only = workload.link_utilization(point.wired_remnant, traffic)
        latency = workload.simulate_latency(point.graph, traffic)
        rows.append(
            _coordination_row(
                k=k,
                state="wireless_fraction",
                pattern=workload.ALLTOALL,
                wireless_fraction=fraction,
                wireless_links=point.deployed,
                collision_fraction=point.collision_fraction,
                mean_rwine_throughput_gbps=point.mean_wireless_capacity_gbps,
                mean_hops=topology.path_metrics(point.graph).mean_hops,
                mean_latency_us=latency.mean_latency_us,
                tail_latency_us=latency.tail_latency_us,
                utilization_efficiency=utilization.utilization_efficiency,
                wired_only_efficiency=wired_only.utilization_efficiency,
                mean_data_rate_gbps=workload.mean_data_rate_gbps(point.graph, traffic),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# assignment dump (coordinate subcommand)


def run_coordinate(config: ScenarioConfig) -> SweepReport:
    """Plan and assign wireless links for the configured torus and state."""
    topo = config.data["topology"]
    state = config.data["coordination"]["state_target"]
    baseline = topology.build_torus(
        topo["k"], topo["n"], topo["wired_capacity_gbps"], topo["hop_latency_us"]
    )
    layout = config.scaled_layout(baseline.num_vertices)
    defaults = config.coordination_defaults(topo["k"])
    if state == "dispersed":
        plan = coordination.plan_dispersed(baseline, defaults["dispersed_budget"])
    elif state == "cohesive":
        plan = coordination.plan_cohesive(
            baseline, defaults["cohesive_budget"], defaults["hub_count"]
        )
    else:
        raise ConfigurationError(
            f"state_target must be dispersed or cohesive, got {state!r}"
        )
    assignment = coordination.assign_panels(plan, layout, config.wireless_spec())
    rows = []
    for link in assignment.links:
        rows.append(
            {
                "src": link.src,
                "dst": link.dst,
                "medium": link.status if link.status != "failed" else "-",
                "panel_id": link.panel_index if link.panel_index is not None else "-",
                "capacity_gbps": link.capacity_bps / 1e9,
                "status": "assigned" if link.status != "failed" else "failed",
            }
        )
    return SweepReport(
        "assignment", tuple(ASSIGNMENT_COLUMNS), tuple(rows), _metadata(config)
    )


# ---------------------------------------------------------------------------
# report emission


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def render_csv(report: SweepReport) -> str:
    lines = [",".join(report.columns)]
    if report.metadata.get("calibration") == "uncalibrated":
        lines.insert(0, "# calibration: uncalibrated")
    for row in report.rows:
        lines.append(",".join(_format_value(row.get(c)) for c in report.columns))
    return "\n".join(lines) + "\n"


def render_json(report: SweepReport) -> str:
    document = {
        "kind": report.kind,
        "metadata": report.metadata,
        "columns": list(report.columns),
        "rows": [dict(row) for row in report.rows],
    }
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def emit_report(report: SweepReport, format: str, out_dir: str) -> List[str]:
    """Write a report deterministically; returns the written paths."""
    if not report.rows:
        raise ValueError("refusing to emit an empty report")
    if format not in ("csv", "json"):
        raise ConfigurationError(f"unknown report format {format!r}")
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{report.kind}.{format}")
    payload = render_csv(report) if format == "csv" else render_json(report)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(payload)
    return [path]


def load_report(path: str) -> SweepReport:
    with open(path, "r", encoding="utf-8") as handle:
        document = json.load(handle)
    return SweepReport(
        kind=document["kind"],
        columns=tuple(document["columns"]),
        rows=tuple(document["rows"]),
        metadata=document["metadata"],
    )
