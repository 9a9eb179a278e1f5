"""3D machine-room model: racks, transceivers, ceiling reflector array.

Builds deterministic layouts, constructs direct (s-WINE) and reflected
(r-WINE) propagation paths, and detects beam conflicts by tracing cones
along path segments. All coordinates are meters; the room spans
[0, length] x [0, width] x [0, height] with the reflector panels on the
ceiling plane z = height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from . import channel
from .errors import InfeasibleGeometryError

Point = Tuple[float, float, float]
Segment = Tuple[Point, Point]

_GRID_EPS = 1e-9


@dataclass(frozen=True)
class MachineRoom:
    length: float = 20.0
    width: float = 20.0
    height: float = 5.5

    def __post_init__(self) -> None:
        if min(self.length, self.width, self.height) <= 0:
            raise ValueError("room dimensions must be positive")


@dataclass(frozen=True)
class RackGrid:
    rows: int = 10
    cols: int = 10
    pitch: float = 2.0
    footprint_x: float = 0.6
    footprint_y: float = 1.2
    rack_height: float = 2.0
    mount_offset: float = 0.2  # transceiver height above the rack top

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rack grid needs at least one rack")
        if self.pitch <= 0 or self.rack_height <= 0:
            raise ValueError("pitch and rack height must be positive")

    @property
    def count(self) -> int:
        return self.rows * self.cols

    @property
    def mount_height(self) -> float:
        return self.rack_height + self.mount_offset


@dataclass(frozen=True)
class IrsArraySpec:
    extent_x: float = 18.0
    extent_y: float = 18.0
    spacing: float = 1.8  # center-to-center panel pitch (d_IRS)

    def __post_init__(self) -> None:
        if self.extent_x <= 0 or self.extent_y <= 0 or self.spacing <= 0:
            raise ValueError("array extent and spacing must be positive")

    def panels_per_side(self, extent: float) -> int:
        return math.floor(extent / self.spacing + _GRID_EPS) + 1


@dataclass(frozen=True)
class BeamCone:
    apex: Point
    axis: Point  # unit vector
    half_angle: float
    length: float

    def __post_init__(self) -> None:
        if not 0 < self.half_angle < math.pi / 2:
            raise ValueError("cone half angle must lie in (0, pi/2)")
        if self.length <= 0:
            raise ValueError("cone length must be positive")


@dataclass(frozen=True)
class WirelessPath:
    kind: str  # "s-WINE" | "r-WINE"
    src: int
    dst: int
    segments: Tuple[Segment, ...]
    total_length: float
    panel_index: Optional[int] = None


class Layout:
    """Immutable placement of racks, transceiver mounts, and ceiling panels."""

    def __init__(
        self,
        room: MachineRoom,
        racks: RackGrid,
        irs: IrsArraySpec,
        mount_points: np.ndarray,
        panel_points: np.ndarray,
        box_min: np.ndarray,
        box_max: np.ndarray,
        panels_per_side: Tuple[int, int],
    ):
        self.room = room
        self.racks = racks
        self.irs = irs
        self.mount_points = mount_points
        self.panel_points = panel_points
        self.box_min = box_min
        self.box_max = box_max
        self.panels_per_side = panels_per_side

    @property
    def num_racks(self) -> int:
        return len(self.mount_points)

    @property
    def num_panels(self) -> int:
        return len(self.panel_points)

    def mount(self, rack: int) -> np.ndarray:
        return self.mount_points[rack]

    def panel(self, index: int) -> np.ndarray:
        return self.panel_points[index]


def _centered_axis(count: int, pitch: float, span: float) -> np.ndarray:
    extent = (count - 1) * pitch
    origin = (span - extent) / 2.0
    return origin + pitch * np.arange(count)


def generate_layout(room: MachineRoom, racks: RackGrid, irs: IrsArraySpec) -> Layout:
    """Place the rack grid and panel grid centered inside the room.

    Rack ids are row-major over (row, col); panel indices are row-major over
    the panel grid. Raises InfeasibleGeometryError naming the violated bound.
    """
    grid_x = (racks.cols - 1) * racks.pitch + racks.footprint_x
    grid_y = (racks.rows - 1) * racks.pitch + racks.footprint_y
    if grid_x > room.length + _GRID_EPS:
        raise InfeasibleGeometryError(
            f"rack grid needs {grid_x:.3f} m along x but room length is {room.length} m"
        )
    if grid_y > room.width + _GRID_EPS:
        raise InfeasibleGeometryError(
            f"rack grid needs {grid_y:.3f} m along y but room width is {room.width} m"
        )
    if racks.mount_height >= room.height:
        raise InfeasibleGeometryError(
            f"transceiver mount at {racks.mount_height:.3f} m does not clear "
            f"room height {room.height} m"
        )
    if irs.extent_x > room.length + _GRID_EPS or irs.extent_y > room.width + _GRID_EPS:
        raise InfeasibleGeometryError(
            f"reflector extent {irs.extent_x} x {irs.extent_y} m exceeds the "
            f"room footprint {room.length} x {room.width} m"
        )

    xs = _centered_axis(racks.cols, racks.pitch, room.length)
    ys = _centered_axis(racks.rows, racks.pitch, room.width)
    gx, gy = np.meshgrid(xs, ys)  # row-major: rack id = row * cols + col
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    mounts = np.column_stack(
        [centers, np.full(len(centers), racks.mount_height)]
    )
    half = np.array([racks.footprint_x / 2.0, racks.footprint_y / 2.0])
    box_min = np.column_stack([centers - half, np.zeros(len(centers))])
    box_max = np.column_stack([centers + half, np.full(len(centers), racks.rack_height)])

    nx = irs.panels_per_side(irs.extent_x)
    ny = irs.panels_per_side(irs.extent_y)
    pxs = _centered_axis(nx, irs.spacing, room.length)
    pys = _centered_axis(ny, irs.spacing, room.width)
    pgx, pgy = np.meshgrid(pxs, pys)
    panels = np.column_stack(
        [pgx.ravel(), pgy.ravel(), np.full(nx * ny, room.height)]
    )
    return Layout(room, racks, irs, mounts, panels, box_min, box_max, (nx, ny))


# ---------------------------------------------------------------------------
# segment primitives


def segment_intersects_box(
    p: np.ndarray, q: np.ndarray, box_min: np.ndarray, box_max: np.ndarray
) -> bool:
    """Slab test of segment pq against one axis-aligned box."""
    d = q - p
    t0, t1 = 0.0, 1.0
    for axis in range(3):
        if abs(d[axis]) < 1e-12:
            if p[axis] < box_min[axis] or p[axis] > box_max[axis]:
                return False
        else:
            ta = (box_min[axis] - p[axis]) / d[axis]
            tb = (box_max[axis] - p[axis]) / d[axis]
            if ta > tb:
                ta, tb = tb, ta
            t0 = max(t0, ta)
            t1 = min(t1, tb)
            if t0 > t1:
                return False
    return True


def segments_intersect_boxes(
    starts: np.ndarray, ends: np.ndarray, box_min: np.ndarray, box_max: np.ndarray
) -> np.ndarray:
    """Vectorized slab test: (S,3) segments x (B,3) boxes -> (S,B) bools."""
    p = starts[:, None, :]  # (S,1,3)
    d = ends[:, None, :] - p
    bmin = box_min[None, :, :]  # (1,B,3)
    bmax = box_max[None, :, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (bmin - p) / d
        tb = (bmax - p) / d
    near = np.minimum(ta, tb)
    far = np.maximum(ta, tb)
    parallel = np.abs(d) < 1e-12
    inside = (p >= bmin) & (p <= bmax)
    near = np.where(parallel, np.where(inside, -np.inf, np.inf), near)
    far = np.where(parallel, np.where(inside, np.inf, -np.inf), far)
    t0 = np.maximum(near.max(axis=2), 0.0)
    t1 = np.minimum(far.min(axis=2), 1.0)
    return t0 <= t1


def segment_segment_closest(
    p1: np.ndarray, q1: np.ndarray, p2: np.ndarray, q2: np.ndarray
) -> Tuple[float, float, float]:
    """Closest approach of two segments: (distance, s, t) with s, t in [0, 1]."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a < 1e-18 and e < 1e-18:
        return float(np.linalg.norm(r)), 0.0, 0.0
    if a < 1e-18:
        s = 0.0
        t = min(1.0, max(0.0, f / e))
    else:
        c = float(d1 @ r)
        if e < 1e-18:
            t = 0.0
            s = min(1.0, max(0.0, -c / a))
        else:
            b = float(d1 @ d2)
            denom = a * e - b * b
            s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom > 1e-18 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = min(1.0, max(0.0, (b - c) / a))
    closest1 = p1 + s * d1
    closest2 = p2 + t * d2
    return float(np.linalg.norm(closest1 - closest2)), s, t


TRANSCEIVER_CLEARANCE_M = 0.01  # beams grazing a foreign mount are obstructed


def _hits_mount(
    layout: Layout, start: np.ndarray, end: np.ndarray, exclude: Set[int]
) -> bool:
    # Transceivers are point obstacles: a segment passing within the
    # clearance of another rack's mount is blocked by its hardware.
    mounts = layout.mount_points
    d = end - start
    length_sq = float(d @ d)
    if length_sq < 1e-18:
        dist = np.linalg.norm(mounts - start, axis=1)
    else:
        t = np.clip((mounts - start) @ d / length_sq, 0.0, 1.0)
        dist = np.linalg.norm(mounts - (start + t[:, None] * d), axis=1)
    mask = np.ones(layout.num_racks, dtype=bool)
    mask[list(exclude)] = False
    return bool((dist[mask] < TRANSCEIVER_CLEARANCE_M).any())


def _segments_near_points(
    starts: np.ndarray, ends: np.ndarray, points: np.ndarray
) -> np.ndarray:
    """(S,) bools: does each segment pass within the transceiver clearance
    of any of the given points?"""
    d = ends - starts  # (S,3)
    length_sq = np.einsum("ij,ij->i", d, d)  # (S,)
    rel = points[None, :, :] - starts[:, None, :]  # (S,P,3)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.einsum("spk,sk->sp", rel, d) / length_sq[:, None]
    t = np.where(length_sq[:, None] < 1e-18, 0.0, np.clip(t, 0.0, 1.0))
    nearest = starts[:, None, :] + t[:, :, None] * d[:, None, :]
    dist = np.linalg.norm(points[None, :, :] - nearest, axis=2)
    return (dist < TRANSCEIVER_CLEARANCE_M).any(axis=1)


def _blocked(
    layout: Layout, start: np.ndarray, end: np.ndarray, exclude: Set[int]
) -> bool:
    if _hits_mount(layout, start, end, exclude):
        return True
    for rack in range(layout.num_racks):
        if rack in exclude:
            continue
        if segment_intersects_box(start, end, layout.box_min[rack], layout.box_max[rack]):
            return True
    return False


# ---------------------------------------------------------------------------
# path construction


def _as_point(a: np.ndarray) -> Point:
    return (float(a[0]), float(a[1]), float(a[2]))


def swine_path(layout: Layout, src: int, dst: int) -> Optional[WirelessPath]:
    """Direct line-of-sight path between two transceivers; None when blocked."""
    if src == dst:
        raise ValueError("s-WINE path needs distinct racks")
    a = layout.mount(src)
    b = layout.mount(dst)
    if _blocked(layout, a, b, {src, dst}):
        return None
    length = float(np.linalg.norm(b - a))
    return WirelessPath(
        kind="s-WINE",
        src=src,
        dst=dst,
        segments=((_as_point(a), _as_point(b)),),
        total_length=length,
    )


def rwine_path(
    layout: Layout, src: int, dst: int, panel: int
) -> Optional[WirelessPath]:
    """Reflected path src -> ceiling panel -> dst; None when either leg is blocked."""
    if not 0 <= panel < layout.num_panels:
        raise ValueError(f"panel index {panel} outside 0..{layout.num_panels - 1}")
    a = layout.mount(src)
    b = layout.mount(dst)
    p = layout.panel(panel)
    exclude = {src, dst}
    if _blocked(layout, a, p, exclude) or _blocked(layout, p, b, exclude):
        return None
    up = float(np.linalg.norm(p - a))
    down = float(np.linalg.norm(b - p))
    return WirelessPath(
        kind="r-WINE",
        src=src,
        dst=dst,
        segments=((_as_point(a), _as_point(p)), (_as_point(p), _as_point(b))),
        total_length=up + down,
        panel_index=panel,
    )


def beam_cones(path: WirelessPath, divergence: float) -> List[BeamCone]:
    """One cone per path segment, apex at the segment start.

    ``divergence`` is the full cone angle; the cone half angle is half of it
    and the cone is truncated at the segment end (it cannot extend past its
    receiver).
    """
    if divergence <= 0:
        raise ValueError("divergence must be positive")
    cones = []
    for start, end in path.segments:
        s = np.asarray(start)
        e = np.asarray(end)
        length = float(np.linalg.norm(e - s))
        axis = (e - s) / length if length > 0 else np.array([0.0, 0.0, 1.0])
        cones.append(
            BeamCone(
                apex=start,
                axis=_as_point(axis),
                half_angle=divergence / 2.0,
                length=max(length, 1e-12),
            )
        )
    return cones


@dataclass(frozen=True)
class CollisionReport:
    conflicts: frozenset  # of (i, j) path-index pairs, i < j
    proportion: float  # |paths in >= 1 conflict| / |paths|


def detect_collisions(
    paths_with_divergence: Sequence[Tuple[WirelessPath, float]],
) -> CollisionReport:
    """Pairwise beam-conflict detection over active paths.

    Two paths conflict when any segment pair approaches closer than the sum
    of the local beam radii at the closest-approach points (radius =
    tan(half_angle) * distance from the segment's apex). Pairs of paths that
    share a rack endpoint are exempt: beams departing or terminating at one
    transceiver are coordinated by that rack rather than mutually
    interfering. The relation is symmetric and irreflexive.
    """
    n = len(paths_with_divergence)
    if n == 0:
        return CollisionReport(frozenset(), 0.0)

    starts, ends, tans, owner = [], [], [], []
    racks: List[Set[int]] = []
    for idx, (path, divergence) in enumerate(paths_with_divergence):
        if divergence <= 0:
            raise ValueError("divergence must be positive")
        for seg in path.segments:
            starts.append(seg[0])
            ends.append(seg[1])
            tans.append(math.tan(divergence / 2.0))
            owner.append(idx)
        racks.append({path.src, path.dst})

    s = np.asarray(starts)
    e = np.asarray(ends)
    tan_half = np.asarray(tans)
    dist, t1, t2 = _all_pairs_segment_closest(s, e)
    seg_len = np.linalg.norm(e - s, axis=1)
    r1 = tan_half[:, None] * (t1 * seg_len[:, None])
    r2 = tan_half[None, :] * (t2 * seg_len[None, :])
    hits = dist < (r1 + r2)

    conflicts = set()
    owner_arr = np.asarray(owner)
    ii, jj = np.nonzero(hits)
    for a, b in zip(ii, jj):
        pa, pb = int(owner_arr[a]), int(owner_arr[b])
        if pa >= pb:
            continue
        if racks[pa] & racks[pb]:
            continue
        conflicts.add((pa, pb))

    involved = {i for pair in conflicts for i in pair}
    return CollisionReport(frozenset(conflicts), len(involved) / n)


def _all_pairs_segment_closest(
    s: np.ndarray, e: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized closest approach for all segment pairs.

    Returns (dist, t_row, t_col) matrices where t_row[i, j] is the parameter
    along segment i at the closest approach to segment j.
    """
    d = e - s
    a = np.einsum("ij,ij->i", d, d)  # squared lengths
    b = d @ d.T
    r = s[:, None, :] - s[None, :, :]
    c = np.einsum("ik,ijk->ij", d, r)  # d1 . (p1 - p2)
    f = -np.einsum("jk,ijk->ij", d, r)  # d2 . (p2 - p1) with sign flip

    a1 = a[:, None]
    a2 = a[None, :]
    denom = a1 * a2 - b * b
    degenerate1 = a1 < 1e-18
    degenerate2 = a2 < 1e-18

    with np.errstate(divide="ignore", invalid="ignore"):
        t_row = np.where(denom > 1e-18, (b * f - c * a2) / denom, 0.0)
        t_row = np.clip(t_row, 0.0, 1.0)
        t_col = np.where(a2 > 1e-18, (b * t_row + f) / a2, 0.0)
        t_row_low = np.where(a1 > 1e-18, -c / a1, 0.0)
        t_row_high = np.where(a1 > 1e-18, (b - c) / a1, 0.0)
    t_row = np.where(t_col < 0.0, np.clip(t_row_low, 0.0, 1.0), t_row)
    t_row = np.where(t_col > 1.0, np.clip(t_row_high, 0.0, 1.0), t_row)
    t_col = np.clip(t_col, 0.0, 1.0)
    t_row = np.where(degenerate1, 0.0, t_row)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_col_point = np.clip(np.where(a2 > 1e-18, f / a2, 0.0), 0.0, 1.0)
    t_col = np.where(degenerate1, t_col_point, t_col)
    t_col = np.where(degenerate2, 0.0, t_col)

    p_near = s[:, None, :] + t_row[:, :, None] * d[:, None, :]
    q_near = s[None, :, :] + t_col[:, :, None] * d[None, :, :]
    dist = np.linalg.norm(p_near - q_near, axis=2)
    np.fill_diagonal(dist, np.inf)
    return dist, t_row, t_col


def panel_candidates(
    layout: Layout, src: int, dst: int, spec: channel.LinkSpec
) -> List[Tuple[int, float]]:
    """Rank panels by the end-to-end capacity of the reflected path.

    Returns (panel_index, capacity_bps) for every unblocked panel, sorted by
    capacity descending with ties broken by ascending panel index; empty when
    every panel is occluded.
    """
    a = layout.mount(src)
    b = layout.mount(dst)
    panels = layout.panel_points
    exclude = np.zeros(layout.num_racks, dtype=bool)
    exclude[[src, dst]] = True
    box_min = layout.box_min[~exclude]
    box_max = layout.box_max[~exclude]
    if len(box_min):
        up_blocked = segments_intersect_boxes(
            np.broadcast_to(a, panels.shape), panels, box_min, box_max
        ).any(axis=1)
        down_blocked = segments_intersect_boxes(
            panels, np.broadcast_to(b, panels.shape), box_min, box_max
        ).any(axis=1)
        foreign_mounts = layout.mount_points[~exclude]
        up_blocked |= _segments_near_points(
            np.broadcast_to(a, panels.shape), panels, foreign_mounts
        )
        down_blocked |= _segments_near_points(
            panels, np.broadcast_to(b, panels.shape), foreign_mounts
        )
        blocked = up_blocked | down_blocked
    else:
        blocked = np.zeros(len(panels), dtype=bool)

    lengths = np.linalg.norm(panels - a, axis=1) + np.linalg.norm(panels - b, axis=1)
    ranked = []
    for panel in range(layout.num_panels):
        if blocked[panel]:
            continue
        capacity = channel.link_budget(spec, float(lengths[panel])).capacity_bps
        ranked.append((panel, capacity))
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked
