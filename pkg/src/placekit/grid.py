"""Candidate point generation over the workspace.

Candidates form a regular lattice.  In ``surface_snap`` mode each (x, y)
column is collapsed to a single point resting on the highest static support
surface reachable inside the workspace, offset upward by the placement
object's lower half-extent so the object's bottom touches the support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, SceneValidationError
from .scene import BOX, CYLINDER, Scene, SceneObject, object_local_aabb

FULL_LATTICE = "full_lattice"
SURFACE_SNAP = "surface_snap"

DEFAULT_POINT_CAP = 1_000_000

_AXIS_EPS = 1e-9


@dataclass(frozen=True)
class CandidateGrid:
    """Ordered candidate points (lexicographic by x, then y, then z)."""

    points: np.ndarray  # (N, 3) float64
    resolution: float
    source: str  # "lattice" or "explicit"

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


def explicit_grid(points, resolution: float = 0.0) -> CandidateGrid:
    """Caller-supplied points, deduplicated and ordered lexicographically."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts):
        pts = np.unique(pts, axis=0)  # sorts lexicographically by x, y, z
    return CandidateGrid(points=pts, resolution=resolution, source="explicit")


def _axis_ticks(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(np.floor((hi - lo) / step + _AXIS_EPS)) + 1
    return lo + step * np.arange(n, dtype=float)


def support_height(scene: Scene, x: float, y: float) -> list[float]:
    """Top z of every static solid intersected by the vertical line at (x, y).

    Returns the tops sorted descending; empty when the column hits nothing.
    Boxes are solved in their local frame, upright cylinders by radial test.
    """
    tops: list[float] = []
    for obj in scene.objects:
        if not obj.static:
            continue
        for shape in obj.shapes:
            world = obj.pose.compose(shape.offset)
            rot = world.orientation.to_matrix()
            center = world.position.as_array()
            if shape.kind == BOX:
                half = np.array(shape.dims, dtype=float)
                # Vertical world line -> local ray p0 + t*d, t is world z.
                p0 = rot.T @ (np.array([x, y, 0.0]) - center)
                d = rot.T @ np.array([0.0, 0.0, 1.0])
                t_lo, t_hi = -np.inf, np.inf
                hit = True
                for k in range(3):
                    if abs(d[k]) < _AXIS_EPS:
                        if abs(p0[k]) > half[k]:
                            hit = False
                            break
                        continue
                    ta = (-half[k] - p0[k]) / d[k]
                    tb = (half[k] - p0[k]) / d[k]
                    t_lo = max(t_lo, min(ta, tb))
                    t_hi = min(t_hi, max(ta, tb))
                if hit and t_lo <= t_hi:
                    tops.append(float(t_hi))
            elif shape.kind == CYLINDER:
                radius, half_h = shape.dims
                axis = rot @ np.array([0.0, 0.0, 1.0])
                if abs(abs(axis[2]) - 1.0) > 1e-9:
                    # Tilted cylinder: bound by the circumscribing box top.
                    half = np.array([radius, radius, half_h])
                    corners = (np.array(
                        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
                        dtype=float,
                    ) * half) @ rot.T + center
                    in_xy = (
                        corners[:, 0].min() <= x <= corners[:, 0].max()
                        and corners[:, 1].min() <= y <= corners[:, 1].max()
                    )
                    if in_xy:
                        tops.append(float(corners[:, 2].max()))
                    continue
                if (x - center[0]) ** 2 + (y - center[1]) ** 2 <= radius * radius:
                    tops.append(float(center[2] + half_h))
    tops.sort(reverse=True)
    return tops


def placement_lower_extent(placement: SceneObject) -> float:
    """Distance from the placement object's origin down to its lowest point."""
    return -object_local_aabb(placement).min.z


def generate_candidates(
    scene: Scene,
    resolution: float,
    z_mode: str = SURFACE_SNAP,
    point_cap: int = DEFAULT_POINT_CAP,
) -> CandidateGrid:
    """Lattice the workspace at the given spacing.

    surface_snap keeps one point per column: just above the highest support
    top whose snapped height still lies inside the workspace (columns whose
    uppermost support would place the object outside the workspace fall
    through to the next support below; columns with no usable support yield
    no point).  full_lattice keeps every lattice node.
    """
    if resolution <= 0.0:
        raise ContractViolationError("resolution must be positive", stage="ingest")
    if z_mode not in (FULL_LATTICE, SURFACE_SNAP):
        raise ContractViolationError(f"unknown z_mode {z_mode!r}", stage="ingest")
    ws = scene.workspace
    xs = _axis_ticks(ws.min.x, ws.max.x, resolution)
    ys = _axis_ticks(ws.min.y, ws.max.y, resolution)
    zs = _axis_ticks(ws.min.z, ws.max.z, resolution)

    count = len(xs) * len(ys) * (len(zs) if z_mode == FULL_LATTICE else 1)
    if count > point_cap:
        raise SceneValidationError(
            f"lattice would hold {count} points (cap {point_cap}); use a coarser resolution",
            "resolution",
        )

    points: list[tuple[float, float, float]] = []
    if z_mode == FULL_LATTICE:
        for x in xs:
            for y in ys:
                for z in zs:
                    points.append((x, y, z))
    else:
        lift = placement_lower_extent(scene.placement_object)
        for x in xs:
            for y in ys:
                for top in support_height(scene, float(x), float(y)):
                    z = top + lift
                    if ws.min.z - _AXIS_EPS <= z <= ws.max.z + _AXIS_EPS:
                        points.append((x, y, z))
                        break
    return CandidateGrid(
        points=np.array(points, dtype=float).reshape(-1, 3),
        resolution=resolution,
        source="lattice",
    )
