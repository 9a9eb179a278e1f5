"""Scenario configuration: schema, defaults, JSON I/O, and digests.

A scenario is a single JSON document; every field has a default and unknown
keys are rejected so typos surface as configuration errors. The config
digest is a SHA-256 over the fully resolved document, so two configs that
resolve to the same scenario share a digest.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from . import channel, geometry
from .errors import ConfigurationError

DEFAULT_CONFIG: Dict[str, Any] = {
    "seed": 1,
    "channel": {
        "thz": {
            "carrier_frequency_hz": 0.30e12,
            "bandwidth_hz": 30e9,
            "tx_power_dbm": 13.0,
            "elements_per_side": 32,
            "element_gain_dbi": 2.0,
            "noise_figure_db": 12.0,
            "atmospheric_attenuation_db_per_m": 0.004,
            "misc_loss_db": 3.59,
            "beam_divergence_rad": 0.12392,
            "modulation": "16-QAM",
            "max_spectral_efficiency": None,
        },
        "fso": {
            "carrier_frequency_hz": 193.55e12,
            "bandwidth_hz": 50e9,
            "tx_power_dbm": 23.01,
            "lens_diameter_m": 0.024,
            "divergence_half_angle_rad": 0.279e-3,
            "pointing_loss_db": 5.0,
            "noise_power_override_dbm": -6.45,
            "misc_loss_db": 3.0,
            "noise_figure_db": 15.0,
            "modulation": "PAM",
            "max_spectral_efficiency": None,
        },
        "near_distance_m": 2.0,
        "far_distance_m": 28.28,
        "thz_far_atmospheric_db": 0.034,
    },
    "layout": {
        "room": {"length": 20.0, "width": 20.0, "height": 5.5},
        "racks": {
            "rows": 10,
            "cols": 10,
            "pitch": 2.0,
            "footprint_x": 0.6,
            "footprint_y": 1.2,
            "rack_height": 2.0,
            "mount_offset": 0.2,
        },
        "irs": {"extent_x": 18.0, "extent_y": 18.0, "spacing": 1.8},
    },
    "topology": {
        "kind": "torus",
        "k": 4,
        "n": 3,
        "wired_capacity_gbps": 200.0,
        "hop_latency_us": 0.6,
        "fat_tree": {"r": 2, "levels": 3, "leaf_capacity_gbps": 100.0},
        "dragonfly": {"a": 4, "h_global": 2, "g": 9},
        "shortcut_count": 0,
    },
    "coordination": {
        "state_target": "cohesive",
        "wireless_channel": "fso",
        "thresholds": {"dispersed_cv": 0.05, "cohesive_cv": 0.25},
        "defaults_by_k": {
            "4": {"dispersed_budget": 32, "cohesive_budget": 44, "hub_count": 4},
            "6": {"dispersed_budget": 108, "cohesive_budget": 192, "hub_count": 8},
            "8": {"dispersed_budget": 256, "cohesive_budget": 416, "hub_count": 14},
        },
    },
    "workload": {
        "patterns": ["neighbor", "alltoall", "random_perm"],
        "compute_ratio": 0.27,
        "baseline_flops": 0.85e9,
    },
    "sweeps": {
        "d_irs_m": [1.5, 1.8, 2.1, 2.4, 2.7, 3.0, 3.3, 3.5],
        "heights_m": [5.5, 7.5, 9.5],
        "k_values": [4, 6, 8],
        "wireless_fractions": [0.1, 0.2, 0.3, 0.4, 0.5],
        "fraction_k_values": [6],
        "irs_channel": "fso",
        "irs_replicates": 5,
    },
}


def _merge(defaults: Any, override: Any, path: str) -> Any:
    if isinstance(defaults, dict):
        if not isinstance(override, dict):
            raise ConfigurationError(f"config field {path or '<root>'} must be a mapping")
        unknown = set(override) - set(defaults)
        # defaults_by_k legitimately takes arbitrary integer keys
        if unknown and not path.endswith("defaults_by_k"):
            raise ConfigurationError(
                f"unknown config field(s) {sorted(unknown)} under {path or '<root>'}"
            )
        merged = {}
        for key, default_value in defaults.items():
            child = f"{path}.{key}" if path else key
            if key in override:
                merged[key] = _merge(default_value, override[key], child)
            else:
                merged[key] = copy.deepcopy(default_value)
        if path.endswith("defaults_by_k"):
            for key in override:
                merged[key] = copy.deepcopy(override[key])
        return merged
    return copy.deepcopy(override)


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario document plus convenience accessors."""

    data: Dict[str, Any]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def with_seed(self, seed: int) -> "ScenarioConfig":
        resolved = copy.deepcopy(self.data)
        resolved["seed"] = int(seed)
        return ScenarioConfig(resolved)

    def digest(self) -> str:
        canonical = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    # -- channel -----------------------------------------------------------
    def thz_spec(self, **overrides: Any) -> channel.ThzSpec:
        params = dict(self.data["channel"]["thz"])
        params.update(overrides)
        return channel.ThzSpec(**params)

    def fso_spec(self, **overrides: Any) -> channel.FsoSpec:
        params = dict(self.data["channel"]["fso"])
        params.update(overrides)
        return channel.FsoSpec(**params)

    def wireless_spec(self, name: Optional[str] = None) -> channel.LinkSpec:
        name = name or self.data["coordination"]["wireless_channel"]
        if name == "thz":
            return self.thz_spec()
        if name == "fso":
            return self.fso_spec()
        raise ConfigurationError(f"unknown wireless channel {name!r}")

    # -- geometry ----------------------------------------------------------
    def room(self, height: Optional[float] = None) -> geometry.MachineRoom:
        spec = self.data["layout"]["room"]
        return geometry.MachineRoom(
            length=spec["length"],
            width=spec["width"],
            height=height if height is not None else spec["height"],
        )

    def rack_grid(self, rows: Optional[int] = None, cols: Optional[int] = None) -> geometry.RackGrid:
        spec = self.data["layout"]["racks"]
        return geometry.RackGrid(
            rows=rows if rows is not None else spec["rows"],
            cols=cols if cols is not None else spec["cols"],
            pitch=spec["pitch"],
            footprint_x=spec["footprint_x"],
            footprint_y=spec["footprint_y"],
            rack_height=spec["rack_height"],
            mount_offset=spec["mount_offset"],
        )

    def irs_spec(
        self, spacing: Optional[float] = None, extent: Optional[float] = None
    ) -> geometry.IrsArraySpec:
        spec = self.data["layout"]["irs"]
        return geometry.IrsArraySpec(
            extent_x=extent if extent is not None else spec["extent_x"],
            extent_y=extent if extent is not None else spec["extent_y"],
            spacing=spacing if spacing is not None else spec["spacing"],
        )

    def build_layout(
        self, height: Optional[float] = None, spacing: Optional[float] = None
    ) -> geometry.Layout:
        return geometry.generate_layout(
            self.room(height), self.rack_grid(), self.irs_spec(spacing)
        )

    def scaled_layout(self, num_racks: int, height: Optional[float] = None) -> geometry.Layout:
        """Layout sized for ``num_racks`` using the default density rules.

        Keeps the reference proportions: room side = grid span + 2 m and
        reflector extent = room side - 2 m, which reproduces the 10x10 rack,
        20 m room, 18 m array reference when num_racks is 100.
        """
        side = 1
        while side * side < num_racks:
            side += 1
        racks = self.rack_grid(rows=side, cols=side)
        room_side = (side - 1) * racks.pitch + 2.0
        room_spec = self.data["layout"]["room"]
        room = geometry.MachineRoom(
            length=room_side,
            width=room_side,
            height=height if height is not None else room_spec["height"],
        )
        irs = self.irs_spec(extent=room_side - 2.0)
        return geometry.generate_layout(room, racks, irs)

    # -- coordination ------------------------------------------------------
    def coordination_defaults(self, k: int) -> Dict[str, int]:
        table = self.data["coordination"]["defaults_by_k"]
        key = str(k)
        if key not in table:
            raise ConfigurationError(f"no coordination defaults for k={k}")
        return {name: int(value) for name, value in table[key].items()}


def resolve_config(overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
    """Merge a (possibly partial) document over the defaults and validate."""
    merged = _merge(DEFAULT_CONFIG, overrides or {}, "")
    return ScenarioConfig(merged)


def load_config(path: Optional[str]) -> ScenarioConfig:
    """Load a scenario from a JSON file; None loads pure defaults."""
    if path is None:
        return resolve_config({})
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigurationError(f"config {path} must contain a JSON object")
    return resolve_config(document)
