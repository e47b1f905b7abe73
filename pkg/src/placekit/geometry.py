"""Primitive geometry types: vectors, unit quaternions, poses, boxes.

Conventions: +z is up, lengths in meters, quaternions stored (w, x, y, z)
and canonicalized so w >= 0.  All types are immutable; math-heavy callers
convert to numpy arrays via ``as_array``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SceneValidationError

_QUAT_NORM_TOL = 1e-9


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise SceneValidationError(f"non-finite component {name}={v}", "vec3")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)


@dataclass(frozen=True)
class UnitQuat:
    """Unit quaternion with scalar part first, canonicalized to w >= 0."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n2 = self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
        if abs(n2 - 1.0) > 1e-6:
            raise SceneValidationError(
                f"quaternion norm^2 {n2:.9f} differs from 1", "orientation"
            )
        # Renormalize exactly and canonicalize the sign of w.
        n = math.sqrt(n2)
        w, x, y, z = self.w / n, self.x / n, self.y / n, self.z / n
        if w < 0.0:
            w, x, y, z = -w, -x, -y, -z
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        n2 = w * w + x * x + y * y + z * z
        if abs(n2 - 1.0) > _QUAT_NORM_TOL:
            raise SceneValidationError("quaternion could not be normalized", "orientation")

    @staticmethod
    def identity() -> "UnitQuat":
        return UnitQuat(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis, angle: float) -> "UnitQuat":
        ax = np.asarray(axis, dtype=float)
        n = float(np.linalg.norm(ax))
        if n == 0.0:
            return UnitQuat.identity()
        ax = ax / n
        h = 0.5 * angle
        s = math.sin(h)
        return UnitQuat(math.cos(h), ax[0] * s, ax[1] * s, ax[2] * s)

    @staticmethod
    def from_matrix(m: np.ndarray) -> "UnitQuat":
        """Convert a proper rotation matrix, picking the numerically safe branch."""
        t = float(np.trace(m))
        if t > 0.0:
            s = math.sqrt(t + 1.0) * 2.0
            w = 0.25 * s
            x = (m[2, 1] - m[1, 2]) / s
            y = (m[0, 2] - m[2, 0]) / s
            z = (m[1, 0] - m[0, 1]) / s
        elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
            w = (m[2, 1] - m[1, 2]) / s
            x = 0.25 * s
            y = (m[0, 1] + m[1, 0]) / s
            z = (m[0, 2] + m[2, 0]) / s
        elif m[1, 1] > m[2, 2]:
            s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
            w = (m[0, 2] - m[2, 0]) / s
            x = (m[0, 1] + m[1, 0]) / s
            y = 0.25 * s
            z = (m[1, 2] + m[2, 1]) / s
        else:
            s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
            w = (m[1, 0] - m[0, 1]) / s
            x = (m[0, 2] + m[2, 0]) / s
            y = (m[1, 2] + m[2, 1]) / s
            z = 0.25 * s
        n = math.sqrt(w * w + x * x + y * y + z * z)
        return UnitQuat(w / n, x / n, y / n, z / n)

    def to_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ],
            dtype=float,
        )

    def multiply(self, other: "UnitQuat") -> "UnitQuat":
        aw, ax, ay, az = self.w, self.x, self.y, self.z
        bw, bx, by, bz = other.w, other.x, other.y, other.z
        return UnitQuat(
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        )


@dataclass(frozen=True)
class Pose:
    position: Vec3 = field(default_factory=lambda: Vec3(0.0, 0.0, 0.0))
    orientation: UnitQuat = field(default_factory=UnitQuat.identity)

    def matrix(self) -> np.ndarray:
        """Homogeneous 4x4 world-from-local transform."""
        m = np.eye(4)
        m[:3, :3] = self.orientation.to_matrix()
        m[:3, 3] = self.position.as_array()
        return m

    def compose(self, local: "Pose") -> "Pose":
        """This pose applied after ``local`` (self is the parent frame)."""
        r = self.orientation.to_matrix()
        p = r @ local.position.as_array() + self.position.as_array()
        return Pose(Vec3.from_array(p), self.orientation.multiply(local.orientation))


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box given by componentwise min/max corners."""

    min: Vec3
    max: Vec3

    def center(self) -> Vec3:
        return Vec3(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
            0.5 * (self.min.z + self.max.z),
        )

    def size(self) -> Vec3:
        return Vec3(
            self.max.x - self.min.x,
            self.max.y - self.min.y,
            self.max.z - self.min.z,
        )

    def contains(self, p: Vec3, tol: float = 0.0) -> bool:
        return (
            self.min.x - tol <= p.x <= self.max.x + tol
            and self.min.y - tol <= p.y <= self.max.y + tol
            and self.min.z - tol <= p.z <= self.max.z + tol
        )

    def distance_to_point(self, p) -> float:
        """Euclidean distance from a point to this box; 0 when inside."""
        q = np.asarray(p, dtype=float)
        lo = self.min.as_array()
        hi = self.max.as_array()
        d = np.maximum(np.maximum(lo - q, 0.0), q - hi)
        return float(np.linalg.norm(d))

    @staticmethod
    def union(boxes: "list[Aabb]") -> "Aabb":
        lo = np.min([b.min.as_array() for b in boxes], axis=0)
        hi = np.max([b.max.as_array() for b in boxes], axis=0)
        return Aabb(Vec3.from_array(lo), Vec3.from_array(hi))


def aabb_of_corners(corners: np.ndarray) -> Aabb:
    return Aabb(
        Vec3.from_array(corners.min(axis=0)), Vec3.from_array(corners.max(axis=0))
    )


_CORNER_SIGNS = np.array(
    [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float
)


def box_corners(center: np.ndarray, rotation: np.ndarray, half: np.ndarray) -> np.ndarray:
    """World-frame corners (8, 3) of an oriented box."""
    return center + (_CORNER_SIGNS * half) @ rotation.T
