"""Quasi-static physics backend for placement simulation.

The model is a sequence of equilibria rather than full impulse dynamics:

* contacts between the placed object's boxes and static boxes / upright
  cylinders are found analytically (SAT with reference-face clipping);
* the support polygon is the 2-D convex hull of contact points projected
  to the horizontal plane;
* a body rests when its center of mass projects strictly inside the
  support polygon with margin, otherwise it rotates rigidly about the
  nearest polygon edge under gravity torque (explicit Euler pendulum)
  until a new contact arrests it or it leaves the workspace;
* perturbation tilts rotate about the center of mass, clipped so they
  never push through geometry; sub-critical tilts decay exponentially
  back to the resting pose, super-critical ones hand over to tipping.

Reported orientations are the equilibrium poses; a decaying tilt overlay
is bookkeeping, not observable state.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, UnsupportedGeometryError
from .geometry import UnitQuat, box_corners
from .scene import BOX, Scene, SceneObject

CONTACT_TOL = 1e-5  # surfaces closer than this are in contact
PENETRATION_FLAG = 1e-6  # deeper overlap at placement marks the run penetrated
REST_MARGIN = 1e-4  # COM must be inside the support polygon by this much
EVENT_TOL = 1e-6  # overlap that triggers a new-contact arrest
RETURN_TIME_CONSTANT_STEPS = 10.0  # tilt decay time constant, in units of dt
RETURN_DONE_ANGLE = 1e-4  # tilt overlay below this snaps back to rest

MODE_RESTING = "resting"
MODE_RETURNING = "returning"
MODE_TILTED = "tilted"
MODE_TIPPING = "tipping"
MODE_FALLING = "falling"
MODE_FALLEN = "fallen"

_Z = np.array([0.0, 0.0, 1.0])


# ---------------------------------------------------------------------------
# World-frame shapes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WorldBox:
    center: np.ndarray
    rot: np.ndarray  # (3, 3), columns are the local axes in world frame
    half: np.ndarray

    def corners(self) -> np.ndarray:
        return box_corners(self.center, self.rot, self.half)


@dataclass(frozen=True)
class WorldCylinder:
    """Cylinder whose axis must be world-vertical for contact queries."""

    center: np.ndarray
    radius: float
    half_height: float
    upright: bool


def _world_shapes(obj: SceneObject, pos: np.ndarray, rot: np.ndarray) -> list:
    shapes = []
    for s in obj.shapes:
        off_r = s.offset.orientation.to_matrix()
        c = pos + rot @ s.offset.position.as_array()
        r = rot @ off_r
        if s.kind == BOX:
            shapes.append(WorldBox(c, r, np.array(s.dims, dtype=float)))
        else:
            axis = r @ _Z
            shapes.append(
                WorldCylinder(c, s.dims[0], s.dims[1], upright=abs(abs(axis[2]) - 1.0) < 1e-9)
            )
    return shapes


def _shape_aabb(shape) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(shape, WorldBox):
        cs = shape.corners()
        return cs.min(axis=0), cs.max(axis=0)
    r = np.array([shape.radius, shape.radius, shape.half_height])
    return shape.center - r, shape.center + r


# ---------------------------------------------------------------------------
# 2-D convex hull and polygon queries
# ---------------------------------------------------------------------------


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, counterclockwise, degenerate inputs passed through."""
    pts = np.unique(np.round(np.asarray(points, dtype=float), 12), axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def build(seq):
        chain: list[np.ndarray] = []
        for p in seq:
            while len(chain) >= 2:
                u = chain[-1] - chain[-2]
                v = p - chain[-2]
                if u[0] * v[1] - u[1] * v[0] > 0.0:
                    break
                chain.pop()
            chain.append(p)
        return chain

    lower = build(pts)
    upper = build(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        return pts[:2]
    return np.array(hull)


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-18:
        return float(np.linalg.norm(p - a))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def polygon_margin(point: np.ndarray, hull: np.ndarray) -> float:
    """Signed distance of a 2-D point to a hull: positive inside, negative outside."""
    if len(hull) < 3:
        if len(hull) == 0:
            return -math.inf
        if len(hull) == 1:
            return -float(np.linalg.norm(point - hull[0]))
        return -_segment_distance(point, hull[0], hull[1])
    inside = True
    min_edge = math.inf
    boundary = math.inf
    n = len(hull)
    for i in range(n):
        a, b = hull[i], hull[(i + 1) % n]
        edge = b - a
        # CCW hull: positive cross means the point is on the interior side.
        cross = float(edge[0] * (point[1] - a[1]) - edge[1] * (point[0] - a[0]))
        length = float(np.hypot(edge[0], edge[1]))
        if length < 1e-15:
            continue
        dist = cross / length
        if dist < 0.0:
            inside = False
        min_edge = min(min_edge, dist)
        boundary = min(boundary, _segment_distance(point, a, b))
    return min_edge if inside else -boundary


def polygon_exit(point: np.ndarray, direction: np.ndarray, hull: np.ndarray):
    """Distance from an interior point to the hull boundary along a direction.

    Returns (distance, edge_a, edge_b) for the crossed edge; distance 0 with
    the nearest edge when the hull is degenerate or the point is outside.
    """
    if len(hull) < 3:
        if len(hull) == 2:
            return 0.0, hull[0], hull[1]
        a = hull[0] if len(hull) else point
        return 0.0, a, a
    best = None
    n = len(hull)
    for i in range(n):
        a, b = hull[i], hull[(i + 1) % n]
        e = b - a
        denom = direction[0] * (-e[1]) - direction[1] * (-e[0])
        if abs(denom) < 1e-15:
            continue
        dx, dy = a[0] - point[0], a[1] - point[1]
        t = (dx * (-e[1]) - dy * (-e[0])) / denom
        u = (direction[0] * dy - direction[1] * dx) / denom
        if t >= -1e-12 and -1e-9 <= u <= 1.0 + 1e-9:
            if best is None or t < best[0]:
                best = (max(t, 0.0), a, b)
    if best is None:
        return 0.0, hull[0], hull[1]
    return best


def polygon_area(hull: np.ndarray) -> float:
    if len(hull) < 3:
        return 0.0
    x, y = hull[:, 0], hull[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def nearest_hull_edge(point: np.ndarray, hull: np.ndarray):
    """The hull edge (a, b) closest to a 2-D point."""
    if len(hull) == 1:
        return hull[0], hull[0]
    if len(hull) == 2:
        return hull[0], hull[1]
    best, pair = math.inf, (hull[0], hull[1])
    n = len(hull)
    for i in range(n):
        a, b = hull[i], hull[(i + 1) % n]
        d = _segment_distance(point, a, b)
        if d < best:
            best, pair = d, (a, b)
    return pair


# ---------------------------------------------------------------------------
# Contact generation
# ---------------------------------------------------------------------------


def _clip_halfspace(poly: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Keep the part of a 3-D polygon with point . normal <= offset."""
    if len(poly) == 0:
        return poly
    out: list[np.ndarray] = []
    d = poly @ normal - offset
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        dp, dq = d[i], d[(i + 1) % n]
        if dp <= 0.0:
            out.append(p)
        if (dp < 0.0 < dq) or (dq < 0.0 < dp):
            t = dp / (dp - dq)
            out.append(p + t * (q - p))
    return np.array(out) if out else np.empty((0, 3))


def _face_quad(box: WorldBox, axis_idx: int, sign: float) -> np.ndarray:
    """Corners of one box face, ordered as a polygon."""
    u_idx, v_idx = (axis_idx + 1) % 3, (axis_idx + 2) % 3
    n = box.rot[:, axis_idx] * sign
    u = box.rot[:, u_idx] * box.half[u_idx]
    v = box.rot[:, v_idx] * box.half[v_idx]
    c = box.center + n * box.half[axis_idx]
    return np.array([c + u + v, c - u + v, c - u - v, c + u - v])


def _support_point(box: WorldBox, direction: np.ndarray) -> np.ndarray:
    signs = np.sign(box.rot.T @ direction)
    signs[signs == 0.0] = 1.0
    return box.center + box.rot @ (signs * box.half)


def _closest_segment_points(p1, q1, p2, q2):
    d1, d2 = q1 - p1, q2 - p2
    r = p1 - p2
    a, e, f = d1 @ d1, d2 @ d2, d2 @ r
    c = d1 @ r
    b = d1 @ d2
    denom = a * e - b * b
    s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > 1e-15 else 0.0
    t = (b * s + f) / e if e > 1e-15 else 0.0
    t = np.clip(t, 0.0, 1.0)
    s = np.clip((b * t - c) / a, 0.0, 1.0) if a > 1e-15 else 0.0
    return p1 + s * d1, p2 + t * d2


_EDGE_PAIRS = np.array([[i, j] for i in range(3) for j in range(3)])


def _sat_axes(a: WorldBox, b: WorldBox):
    """Face and edge-cross separations for the 15 SAT axes, vectorized.

    Returns (face_sep (6,), face_axes (6, 3), edge_sep (E,), edge_axes
    (E, 3), edge_pairs (E, 2)).
    """
    d = b.center - a.center
    face_axes = np.vstack([a.rot.T, b.rot.T])  # rows are unit axes
    ra = np.abs(face_axes @ a.rot) @ a.half
    rb = np.abs(face_axes @ b.rot) @ b.half
    face_sep = np.abs(face_axes @ d) - (ra + rb)

    # Manual pairwise cross products: np.cross is slow on small arrays.
    u = a.rot.T[:, None, :]
    v = b.rot.T[None, :, :]
    cx = u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1]
    cy = u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2]
    cz = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    crosses = np.stack([cx, cy, cz], axis=-1).reshape(9, 3)
    norms = np.sqrt((crosses * crosses).sum(axis=1))
    valid = norms > 1e-9
    edge_axes = crosses[valid] / norms[valid, None]
    edge_pairs = _EDGE_PAIRS[valid]
    if len(edge_axes):
        ra_e = np.abs(edge_axes @ a.rot) @ a.half
        rb_e = np.abs(edge_axes @ b.rot) @ b.half
        edge_sep = np.abs(edge_axes @ d) - (ra_e + rb_e)
    else:
        edge_sep = np.empty(0)
    return face_sep, face_axes, edge_sep, edge_axes, edge_pairs


def box_box_separation(a: WorldBox, b: WorldBox) -> float:
    """SAT separation: negative means overlap of that depth."""
    face_sep, _, edge_sep, _, _ = _sat_axes(a, b)
    sep = float(face_sep.max())
    if len(edge_sep):
        sep = max(sep, float(edge_sep.max()))
    return sep


def box_box_contact(a: WorldBox, b: WorldBox, tol: float = CONTACT_TOL):
    """SAT separation plus a clipped contact manifold.

    Returns (separation, points) where separation < 0 means overlap of that
    depth and points is an (M, 3) array, empty when separation > tol.
    """
    d = b.center - a.center
    face_sep, face_axes, edge_sep, edge_axes, edge_pairs = _sat_axes(a, b)
    best_face = int(np.argmax(face_sep))
    sep = float(face_sep[best_face])
    best_edge = -1
    if len(edge_sep):
        best_edge = int(np.argmax(edge_sep))
        sep = max(sep, float(edge_sep[best_edge]))
    if sep > tol:
        return sep, np.empty((0, 3))

    # Prefer face manifolds; fall back to an edge-edge point only when the
    # edge axis is clearly the separating one.
    if best_edge >= 0 and edge_sep[best_edge] > face_sep[best_face] + 1e-9:
        axis = edge_axes[best_edge]
        i, j = edge_pairs[best_edge]
        if axis @ d < 0.0:
            axis = -axis
        pa = _support_point(a, axis)
        pb = _support_point(b, -axis)
        ea = a.rot[:, i] * a.half[i]
        eb = b.rot[:, j] * b.half[j]
        ca, cb = _closest_segment_points(pa - ea, pa + ea, pb - eb, pb + eb)
        return sep, np.array([(ca + cb) * 0.5])

    if best_face < 3:
        ref, inc, ref_idx = a, b, best_face
        n_sign = 1.0 if face_axes[best_face] @ d >= 0.0 else -1.0
    else:
        ref, inc, ref_idx = b, a, best_face - 3
        n_sign = 1.0 if face_axes[best_face] @ (-d) >= 0.0 else -1.0
    n = ref.rot[:, ref_idx] * n_sign

    alignment = inc.rot.T @ n
    inc_idx = int(np.argmax(np.abs(alignment)))
    inc_sign = -1.0 if alignment[inc_idx] > 0.0 else 1.0
    poly = _face_quad(inc, inc_idx, inc_sign)

    for side in ((ref_idx + 1) % 3, (ref_idx + 2) % 3):
        u = ref.rot[:, side]
        off = float(u @ ref.center)
        poly = _clip_halfspace(poly, u, off + ref.half[side])
        poly = _clip_halfspace(poly, -u, -(off - ref.half[side]))
    if len(poly):
        face_off = float(n @ ref.center) + ref.half[ref_idx]
        depth = poly @ n - face_off
        poly = poly[depth <= tol]
    if len(poly) == 0:
        # Degenerate clip: keep the deepest incident corner.
        corners = inc.corners()
        poly = corners[[int(np.argmin(corners @ n))]]
    return sep, poly


_DISK_DIRS = np.stack(
    [
        np.array([math.cos(t), math.sin(t)])
        for t in np.linspace(0.0, 2.0 * math.pi, 48, endpoint=False)
    ]
)


def _box_cylinder_geometry(box: WorldBox, cyl: WorldCylinder):
    if not cyl.upright:
        raise UnsupportedGeometryError(
            "contact with a tilted cylinder is not supported by the built-in backend"
        )
    corners = box.corners()
    bz_lo, bz_hi = float(corners[:, 2].min()), float(corners[:, 2].max())
    cz_lo, cz_hi = cyl.center[2] - cyl.half_height, cyl.center[2] + cyl.half_height
    sep_z = max(cz_lo - bz_hi, bz_lo - cz_hi)
    foot = convex_hull_2d(corners[:, :2])
    margin = polygon_margin(cyl.center[:2], foot)
    # margin > 0 means the axis pierces the footprint (radially overlapping).
    sep_r = -(margin + cyl.radius) if margin > 0 else -margin - cyl.radius
    return corners, foot, margin, sep_z, sep_r, cz_lo, cz_hi, bz_lo, bz_hi


def box_cylinder_separation(box: WorldBox, cyl: WorldCylinder) -> float:
    _, _, _, sep_z, sep_r, *_ = _box_cylinder_geometry(box, cyl)
    return max(sep_z, sep_r)


def box_cylinder_contact(box: WorldBox, cyl: WorldCylinder, tol: float = CONTACT_TOL):
    """Contacts between a box and an upright cylinder (axis along world z)."""
    corners, foot, margin, sep_z, sep_r, cz_lo, cz_hi, bz_lo, bz_hi = (
        _box_cylinder_geometry(box, cyl)
    )
    center_xy = cyl.center[:2]
    sep = max(sep_z, sep_r)
    if sep > tol:
        return sep, np.empty((0, 3))

    if sep_z >= sep_r - 1e-12:
        # Vertical face contact against the nearer disk.
        z = cz_hi if box.center[2] >= cyl.center[2] else cz_lo
        rim = cyl.center[:2] + _DISK_DIRS * cyl.radius
        pts = [p for p in rim if polygon_margin(p, foot) >= -tol]
        for p in foot:
            if np.linalg.norm(p - center_xy) <= cyl.radius + tol:
                pts.append(p)
        if not pts:
            pts = [center_xy]
        return sep, np.array([[p[0], p[1], z] for p in pts])

    # Lateral wall contact at the overlapping height band.
    z = 0.5 * (max(bz_lo, cz_lo) + min(bz_hi, cz_hi))
    if margin > 0:
        xy = center_xy
    else:
        best = None
        n = len(foot)
        for i in range(max(n, 1)):
            a = foot[i]
            b = foot[(i + 1) % n] if n > 1 else a
            ab = b - a
            denom = float(ab @ ab)
            t = float(np.clip((center_xy - a) @ ab / denom, 0.0, 1.0)) if denom > 1e-18 else 0.0
            q = a + t * ab
            dd = float(np.linalg.norm(center_xy - q))
            if best is None or dd < best[0]:
                best = (dd, q)
        xy = best[1]
    return sep, np.array([[xy[0], xy[1], z]])


def pair_contact(obj_shape, static_shape, tol: float = CONTACT_TOL):
    if isinstance(obj_shape, WorldCylinder):
        raise UnsupportedGeometryError(
            "cylinder (sphere-like) placement objects are not supported by the built-in backend"
        )
    if isinstance(static_shape, WorldBox):
        return box_box_contact(obj_shape, static_shape, tol)
    return box_cylinder_contact(obj_shape, static_shape, tol)


def pair_separation(obj_shape, static_shape) -> float:
    if isinstance(obj_shape, WorldCylinder):
        raise UnsupportedGeometryError(
            "cylinder (sphere-like) placement objects are not supported by the built-in backend"
        )
    if isinstance(static_shape, WorldBox):
        return box_box_separation(obj_shape, static_shape)
    return box_cylinder_separation(obj_shape, static_shape)


# ---------------------------------------------------------------------------
# Mass properties
# ---------------------------------------------------------------------------


def _shape_volume(s) -> float:
    if s.kind == BOX:
        hx, hy, hz = s.dims
        return 8.0 * hx * hy * hz
    r, hh = s.dims
    return 2.0 * math.pi * r * r * hh


def object_com_local(obj: SceneObject) -> np.ndarray:
    """Uniform-density centroid of the object's shapes, in the object frame."""
    vols = np.array([_shape_volume(s) for s in obj.shapes])
    centers = np.array([s.offset.position.as_array() for s in obj.shapes])
    return (vols[:, None] * centers).sum(axis=0) / vols.sum()


def _shape_inertia_local(s, m: float) -> np.ndarray:
    if s.kind == BOX:
        hx, hy, hz = s.dims
        return np.diag(
            [
                m / 3.0 * (hy * hy + hz * hz),
                m / 3.0 * (hx * hx + hz * hz),
                m / 3.0 * (hx * hx + hy * hy),
            ]
        )
    r, hh = s.dims
    ixy = m * (3.0 * r * r + 4.0 * hh * hh) / 12.0
    return np.diag([ixy, ixy, m * r * r / 2.0])


def _rodrigues(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation matrix about a unit axis, without quaternion round-trips."""
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    t = 1.0 - c
    return np.array(
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    )


# ---------------------------------------------------------------------------
# Simulation state machine
# ---------------------------------------------------------------------------


@dataclass
class SimState:
    """One placement run's state; arrays are replaced, never mutated in place."""

    scene: Scene
    obj: SceneObject
    pos: np.ndarray
    rot: np.ndarray
    mode: str = MODE_FALLING
    vel_z: float = 0.0
    overlay_angle: float = 0.0
    tilt_axis: np.ndarray | None = None
    tilt_angle: float = 0.0
    pivot_point: np.ndarray | None = None
    pivot_axis: np.ndarray | None = None
    omega: float = 0.0
    support_hull: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    contact_z: float = 0.0
    support_ids: tuple[int, ...] = ()

    def copy(self) -> "SimState":
        return copy.copy(self)


class QuasiStaticBackend:
    """Analytic settle / return / tip / fall classifier behind the backend API."""

    def __init__(self):
        self._static_cache: dict[int, list[tuple]] = {}
        self._mass_cache: dict[int, tuple] = {}

    def _mass_properties(self, obj: SceneObject):
        """Cached (com_local, per-shape masses, per-shape local inertia, offsets)."""
        key = id(obj)
        hit = self._mass_cache.get(key)
        if hit is None:
            vols = np.array([_shape_volume(s) for s in obj.shapes])
            masses = obj.mass * vols / vols.sum()
            com_local = object_com_local(obj)
            inertias = [_shape_inertia_local(s, m) for s, m in zip(obj.shapes, masses)]
            offsets = [
                (s.offset.position.as_array(), s.offset.orientation.to_matrix())
                for s in obj.shapes
            ]
            hit = (com_local, masses, inertias, offsets)
            self._mass_cache[key] = hit
        return hit

    def _inertia_about(
        self, state: SimState, pivot_point: np.ndarray, axis: np.ndarray
    ) -> float:
        _, masses, inertias, offsets = self._mass_properties(state.obj)
        total = 0.0
        for m, i_local, (off_p, off_r) in zip(masses, inertias, offsets):
            r_world = state.rot @ off_r
            total += float(axis @ (r_world @ i_local @ r_world.T) @ axis)
            rel = state.pos + state.rot @ off_p - pivot_point
            perp = rel - (rel @ axis) * axis
            total += m * float(perp @ perp)
        return total

    # -- static broadphase ----------------------------------------------

    def _statics(self, scene: Scene) -> list[tuple]:
        key = id(scene)
        cached = self._static_cache.get(key)
        if cached is None:
            cached = []
            for obj in scene.objects:
                if not obj.static:
                    continue
                for shp in _world_shapes(
                    obj, obj.pose.position.as_array(), obj.pose.orientation.to_matrix()
                ):
                    lo, hi = _shape_aabb(shp)
                    cached.append((shp, lo, hi))
            self._static_cache[key] = cached
        return cached

    def _posed_shapes(self, state: SimState) -> list:
        _, _, _, offsets = self._mass_properties(state.obj)
        shapes = []
        for s, (off_p, off_r) in zip(state.obj.shapes, offsets):
            c = state.pos + state.rot @ off_p
            r = state.rot @ off_r
            if s.kind == BOX:
                shapes.append(WorldBox(c, r, np.asarray(s.dims, dtype=float)))
            else:
                axis = r[:, 2]
                shapes.append(
                    WorldCylinder(
                        c, s.dims[0], s.dims[1], upright=abs(abs(axis[2]) - 1.0) < 1e-9
                    )
                )
        return shapes

    def _nearby(self, state: SimState, pad: float = 0.02, exclude: tuple = ()):
        shapes = self._posed_shapes(state)
        lo = np.full(3, math.inf)
        hi = np.full(3, -math.inf)
        for shp in shapes:
            slo, shi = _shape_aabb(shp)
            lo = np.minimum(lo, slo)
            hi = np.maximum(hi, shi)
        lo -= pad
        hi += pad
        near = [
            (i, s)
            for i, (s, slo, shi) in enumerate(self._statics(state.scene))
            if i not in exclude and np.all(slo <= hi) and np.all(shi >= lo)
        ]
        return shapes, near

    def _contacts(self, state: SimState, tol: float = CONTACT_TOL):
        """Contact points, the minimum separation, and the touched static ids."""
        obj_shapes, statics = self._nearby(state)
        points: list[np.ndarray] = []
        touched: list[int] = []
        min_sep = math.inf
        for os in obj_shapes:
            for idx, ss in statics:
                sep, pts = pair_contact(os, ss, tol)
                min_sep = min(min_sep, sep)
                if sep <= tol and len(pts):
                    points.append(pts)
                    touched.append(idx)
        all_pts = np.vstack(points) if points else np.empty((0, 3))
        return all_pts, min_sep, tuple(sorted(set(touched)))

    def _min_separation(self, state: SimState, exclude: tuple = ()) -> float:
        obj_shapes, statics = self._nearby(state, exclude=exclude)
        min_sep = math.inf
        for os in obj_shapes:
            for _, ss in statics:
                min_sep = min(min_sep, pair_separation(os, ss))
                if min_sep < -1e-3:
                    return min_sep  # already deeply penetrating; depth unused
        return min_sep

    # -- mass helpers -----------------------------------------------------

    def _com(self, state: SimState) -> np.ndarray:
        return state.pos + state.rot @ self._mass_properties(state.obj)[0]

    def _aabb_top(self, state: SimState) -> float:
        shapes = _world_shapes(state.obj, state.pos, state.rot)
        return max(_shape_aabb(s)[1][2] for s in shapes)

    # -- public backend API ------------------------------------------------

    def place(self, scene: Scene, obj: SceneObject, point) -> SimState:
        state = SimState(
            scene=scene,
            obj=obj,
            pos=np.asarray(point, dtype=float).copy(),
            rot=obj.pose.orientation.to_matrix(),
        )
        return self._classify(state)

    def orientation(self, state: SimState) -> UnitQuat:
        return UnitQuat.from_matrix(state.rot)

    def scalar_component(self, state: SimState) -> float:
        """w of the canonical orientation quaternion (trace identity, w >= 0)."""
        return 0.5 * math.sqrt(max(0.0, 1.0 + float(np.trace(state.rot))))

    def at_rest(self, state: SimState) -> bool:
        return state.mode == MODE_RESTING

    def penetrating(self, state: SimState) -> bool:
        return self._min_separation(state) < -PENETRATION_FLAG

    def tilt(self, state: SimState, axis, angle: float) -> SimState:
        """Request a perturbation tilt about the COM; resolved on the next step.

        The rotation is clipped against geometry the object is not already
        resting on, so a perturbation presses against lateral obstacles (a
        rail wall, a neighboring object) instead of passing through them.
        The supporting shapes themselves are exempt: a COM rotation dips the
        contact corners slightly into the support, which stands in for the
        physical pivot about the support edge.  Non-resting states ignore
        the perturbation.
        """
        if state.mode not in (MODE_RESTING, MODE_RETURNING):
            return state
        ax = np.asarray(axis, dtype=float)
        n = np.linalg.norm(ax)
        if n == 0.0 or abs(ax[2]) / n > 1e-9:
            raise ContractViolationError(
                "tilt axis must be a nonzero horizontal vector", stage="stability"
            )
        ax = ax / n
        applied = self._max_free_rotation(
            state, self._com(state), ax, angle, exclude=state.support_ids
        )
        s = state.copy()
        s.mode = MODE_TILTED
        s.tilt_axis = ax
        s.tilt_angle = applied
        return s

    def step(self, state: SimState, dt: float) -> SimState:
        if state.mode in (MODE_RESTING, MODE_FALLEN):
            return state
        if state.mode == MODE_RETURNING:
            return self._step_return(state)
        if state.mode == MODE_TILTED:
            return self._resolve_tilt(state)
        if state.mode == MODE_FALLING:
            return self._step_fall(state, dt)
        if state.mode == MODE_TIPPING:
            return self._step_tip(state, dt)
        raise ContractViolationError(f"unknown mode {state.mode}", stage="stability")

    # -- classification -----------------------------------------------------

    def _classify(self, state: SimState) -> SimState:
        points, _, touched = self._contacts(state)
        s = state.copy()
        if len(points) == 0:
            s.mode = MODE_FALLING
            return s
        hull = convex_hull_2d(points[:, :2])
        com = self._com(s)
        margin = polygon_margin(com[:2], hull)
        s.support_hull = hull
        s.contact_z = float(points[:, 2].mean())
        s.support_ids = touched
        if margin >= REST_MARGIN:
            s.mode = MODE_RESTING
            s.vel_z = 0.0
            return s
        edge_a, edge_b = nearest_hull_edge(com[:2], hull)
        return self._start_tipping(s, edge_a, edge_b)

    def _start_tipping(self, state: SimState, edge_a, edge_b) -> SimState:
        s = state.copy()
        direction = np.asarray(edge_b, dtype=float) - np.asarray(edge_a, dtype=float)
        norm = np.linalg.norm(direction)
        com = self._com(s)
        if norm < 1e-12:
            # Point pivot: rotate about the horizontal perpendicular to the
            # COM offset, or an arbitrary axis for a perfectly centered COM.
            offset = com[:2] - np.asarray(edge_a, dtype=float)
            if np.linalg.norm(offset) < 1e-12:
                axis2 = np.array([1.0, 0.0])
            else:
                off = offset / np.linalg.norm(offset)
                axis2 = np.array([-off[1], off[0]])
        else:
            axis2 = direction / norm
        anchor = np.asarray(edge_a, dtype=float)
        s.pivot_axis = np.array([axis2[0], axis2[1], 0.0])
        s.pivot_point = np.array([anchor[0], anchor[1], state.contact_z])
        s.omega = 0.0
        s.mode = MODE_TIPPING
        return s

    # -- per-mode stepping ----------------------------------------------

    def _step_return(self, state: SimState) -> SimState:
        s = state.copy()
        s.overlay_angle *= math.exp(-1.0 / RETURN_TIME_CONSTANT_STEPS)
        if s.overlay_angle < RETURN_DONE_ANGLE:
            s.overlay_angle = 0.0
            s.mode = MODE_RESTING
        return s

    def _resolve_tilt(self, state: SimState) -> SimState:
        """Decide whether the pending tilt decays back or topples the object."""
        s = state.copy()
        axis = s.tilt_axis
        angle = s.tilt_angle
        s.tilt_axis = None
        s.tilt_angle = 0.0
        lean = np.cross(axis, _Z)
        lean_norm = np.linalg.norm(lean[:2])
        com = self._com(s)
        if lean_norm < 1e-12 or len(s.support_hull) == 0:
            s.mode = MODE_RESTING
            return s
        if (
            polygon_area(s.support_hull) < 1e-8
            or polygon_margin(com[:2], s.support_hull) < REST_MARGIN
        ):
            # Resting without a supporting polygon under the COM only happens
            # in arrested (wedged) poses; the bracing contact absorbs small
            # perturbations.
            s.mode = MODE_RETURNING
            s.overlay_angle = angle
            return s
        lean2 = lean[:2] / lean_norm
        exit_dist, edge_a, edge_b = polygon_exit(com[:2], lean2, s.support_hull)
        height = max(com[2] - s.contact_z, 1e-9)
        critical = math.atan2(exit_dist, height)
        if angle <= critical:
            s.mode = MODE_RETURNING
            s.overlay_angle = angle
            return s
        tipping = self._start_tipping(s, edge_a, edge_b)
        # Keep the rotation sense that leans the body the way the tilt did.
        if np.cross(tipping.pivot_axis, _Z)[:2] @ lean2 > 0.0:
            tipping.pivot_axis = -tipping.pivot_axis
        pivot = tipping.pivot_point
        free = self._max_free_rotation(tipping, pivot, -tipping.pivot_axis, angle)
        rotated = self._rotate_about(tipping, pivot, -tipping.pivot_axis, free)
        if free < angle - 1e-9:
            # Wedged against geometry before reaching the tilt angle.
            return self._arrest(rotated)
        return rotated

    def _step_fall(self, state: SimState, dt: float) -> SimState:
        s = state.copy()
        s.vel_z -= s.scene.gravity * dt
        dz = s.vel_z * dt
        moved = s.copy()
        moved.pos = s.pos + np.array([0.0, 0.0, dz])
        if self._min_separation(moved) < -EVENT_TOL:
            frac = self._bisect(
                lambda f: self._translated(s, dz * f), lo=0.0, hi=1.0
            )
            landed = self._translated(s, dz * frac)
            landed.vel_z = 0.0
            return self._classify(landed)
        if self._aabb_top(moved) < moved.scene.workspace.min.z:
            moved.mode = MODE_FALLEN
            return moved
        return moved

    def _translated(self, state: SimState, dz: float) -> SimState:
        s = state.copy()
        s.pos = state.pos + np.array([0.0, 0.0, dz])
        return s

    def _step_tip(self, state: SimState, dt: float) -> SimState:
        s = state.copy()
        com = self._com(s)
        axis = s.pivot_axis
        rel = com - s.pivot_point
        mg = s.obj.mass * s.scene.gravity
        # ((com - pivot) x (0, 0, -mg)) . axis, expanded.
        torque = mg * (axis[1] * rel[0] - axis[0] * rel[1])
        inertia = self._inertia_about(s, s.pivot_point, axis)
        s.omega += torque / inertia * dt
        dtheta = s.omega * dt
        moved = self._rotate_about(s, s.pivot_point, axis, dtheta)
        if self._min_separation(moved) < -EVENT_TOL:
            frac = self._bisect(
                lambda f: self._rotate_about(s, s.pivot_point, axis, dtheta * f),
                lo=0.0,
                hi=1.0,
            )
            arrested = self._rotate_about(s, s.pivot_point, axis, dtheta * frac)
            return self._arrest(arrested)
        if self._aabb_top(moved) < moved.scene.workspace.min.z:
            moved.mode = MODE_FALLEN
        return moved

    def _arrest(self, state: SimState) -> SimState:
        """A new contact stops the rotation; settle in the wedged pose."""
        points, _, touched = self._contacts(state)
        s = state.copy()
        s.omega = 0.0
        if len(points):
            s.support_hull = convex_hull_2d(points[:, :2])
            s.contact_z = float(points[:, 2].mean())
            s.support_ids = touched
        s.mode = MODE_RESTING
        return s

    # -- geometric helpers ----------------------------------------------

    def _rotate_about(
        self, state: SimState, point: np.ndarray, axis: np.ndarray, angle: float
    ) -> SimState:
        s = state.copy()
        rot = _rodrigues(axis, angle)
        s.pos = point + rot @ (state.pos - point)
        s.rot = rot @ state.rot
        return s

    def _max_free_rotation(
        self,
        state: SimState,
        point: np.ndarray,
        axis: np.ndarray,
        angle: float,
        exclude: tuple = (),
    ) -> float:
        """Largest rotation about a line that keeps the body collision-free."""
        full = self._rotate_about(state, point, axis, angle)
        if self._min_separation(full, exclude) >= -EVENT_TOL:
            return angle
        frac = self._bisect(
            lambda f: self._rotate_about(state, point, axis, angle * f),
            lo=0.0,
            hi=1.0,
            exclude=exclude,
        )
        return angle * frac

    def _bisect(self, posed, lo: float, hi: float, iters: int = 30, exclude: tuple = ()) -> float:
        """Largest fraction in [lo, hi] whose pose stays above -EVENT_TOL overlap."""
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if self._min_separation(posed(mid), exclude) < -EVENT_TOL:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-5:
                # Step deltas are at most centimeters or ~0.1 rad, so this
                # bounds the pose error well below the contact tolerance.
                break
        return lo


def builtin_backend() -> QuasiStaticBackend:
    """The packaged quasi-static backend (boxes and upright cylinders)."""
    return QuasiStaticBackend()
