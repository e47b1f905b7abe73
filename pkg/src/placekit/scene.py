"""Declarative scene model and document parsing.

A scene document is a JSON object tree holding the full world state: static
geometry, labeled context objects with attributes, the object to place, and
the reachable workspace.  Parsing is strict by default: unknown keys are
rejected with the offending path so authoring mistakes surface immediately.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SceneValidationError
from .geometry import Aabb, Pose, UnitQuat, Vec3, aabb_of_corners, box_corners

logger = logging.getLogger(__name__)

DEFAULT_GRAVITY = 9.81

BOX = "box"
CYLINDER = "cylinder"
_SHAPE_KINDS = (BOX, CYLINDER)

SIMILARITY_KINDS = ("color", "shape", "object_property", "genre", "none")


@dataclass(frozen=True)
class ShapePrimitive:
    """A box (half-extents) or cylinder (radius, half-height) in the object frame."""

    kind: str
    dims: tuple[float, ...]
    offset: Pose = field(default_factory=Pose)

    def __post_init__(self):
        if self.kind not in _SHAPE_KINDS:
            raise SceneValidationError(f"unknown shape kind {self.kind!r}", "shapes.kind")
        expected = 3 if self.kind == BOX else 2
        if len(self.dims) != expected:
            raise SceneValidationError(
                f"{self.kind} expects {expected} dims, got {len(self.dims)}", "shapes.dims"
            )
        if any(not math.isfinite(d) or d <= 0.0 for d in self.dims):
            raise SceneValidationError(
                f"shape dims must be positive, got {self.dims}", "shapes.dims"
            )

    def local_half_extents(self) -> np.ndarray:
        """Half-extents of the shape's own bounding box (cylinder circumscribed)."""
        if self.kind == BOX:
            return np.array(self.dims, dtype=float)
        r, hh = self.dims
        return np.array([r, r, hh], dtype=float)


@dataclass(frozen=True)
class SceneObject:
    id: str
    label: str
    shapes: tuple[ShapePrimitive, ...]
    pose: Pose = field(default_factory=Pose)
    mass: float = 0.0
    static: bool = False
    attributes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise SceneValidationError("object id must be nonempty", "objects.id")
        if not self.shapes:
            raise SceneValidationError(
                f"object {self.id!r} has no shapes", f"objects[{self.id}].shapes"
            )
        if not self.static and self.mass <= 0.0:
            raise SceneValidationError(
                f"dynamic object {self.id!r} needs mass > 0", f"objects[{self.id}].mass"
            )


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]
    placement_object: SceneObject
    workspace: Aabb
    gravity: float = DEFAULT_GRAVITY

    def __post_init__(self):
        ids = [o.id for o in self.objects]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise SceneValidationError(
                f"duplicate object ids {sorted(dupes)}", "objects.id"
            )
        if self.placement_object.id in ids:
            raise SceneValidationError(
                f"placement object id {self.placement_object.id!r} collides with a scene object",
                "placement_object.id",
            )
        if self.placement_object.static:
            raise SceneValidationError(
                "placement object cannot be static", "placement_object.static"
            )
        lo, hi = self.workspace.min, self.workspace.max
        if lo.x > hi.x or lo.y > hi.y or lo.z > hi.z:
            raise SceneValidationError("workspace min must not exceed max", "workspace")
        # The z span may be zero (planar workspace); x and y must span an area.
        if lo.x >= hi.x or lo.y >= hi.y:
            raise SceneValidationError(
                "workspace must span a positive area in x and y", "workspace"
            )
        if self.gravity <= 0.0:
            raise SceneValidationError("gravity must be positive", "gravity")

    def object_by_id(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)


@dataclass(frozen=True)
class TaskDescription:
    text: str
    similarity_hint: str = "none"

    def __post_init__(self):
        if self.similarity_hint not in SIMILARITY_KINDS:
            raise SceneValidationError(
                f"unknown similarity hint {self.similarity_hint!r}", "task.similarity_hint"
            )


def shape_aabb(shape: ShapePrimitive, object_pose: Pose) -> Aabb:
    """World-frame bounding box of one shape under the owning object's pose."""
    world = object_pose.compose(shape.offset)
    corners = box_corners(
        world.position.as_array(), world.orientation.to_matrix(), shape.local_half_extents()
    )
    return aabb_of_corners(corners)


def object_aabb(obj: SceneObject) -> Aabb:
    """Tight axis-aligned bound over all of the object's shapes at its pose."""
    return Aabb.union([shape_aabb(s, obj.pose) for s in obj.shapes])


def object_local_aabb(obj: SceneObject) -> Aabb:
    """Bounding box of the object's shapes in its own frame (pose ignored)."""
    return Aabb.union([shape_aabb(s, Pose()) for s in obj.shapes])


# ---------------------------------------------------------------------------
# Document parsing
# ---------------------------------------------------------------------------

_POSE_KEYS = {"position", "orientation"}
_SHAPE_KEYS = {"kind", "dims", "offset"}
_OBJECT_KEYS = {"id", "label", "static", "mass", "pose", "shapes", "attributes"}
_SCENE_KEYS = {"objects", "placement_object", "workspace", "gravity"}
_WORKSPACE_KEYS = {"min", "max"}


def _check_keys(node: dict, allowed: set[str], path: str, strict: bool):
    unknown = set(node) - allowed
    if unknown:
        msg = f"unknown keys {sorted(unknown)}"
        if strict:
            raise SceneValidationError(msg, path)
        logger.warning("%s: %s (ignored in lenient mode)", path, msg)


def _require(node: dict, key: str, path: str):
    if key not in node:
        raise SceneValidationError(f"missing required key {key!r}", path)
    return node[key]


def _parse_vec3(value, path: str) -> Vec3:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise SceneValidationError("expected [x, y, z]", path)
    try:
        return Vec3(float(value[0]), float(value[1]), float(value[2]))
    except (TypeError, ValueError) as exc:
        raise SceneValidationError(f"non-numeric component: {exc}", path) from exc


def _parse_quat(value, path: str) -> UnitQuat:
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise SceneValidationError("expected [w, x, y, z]", path)
    try:
        return UnitQuat(float(value[0]), float(value[1]), float(value[2]), float(value[3]))
    except (TypeError, ValueError) as exc:
        raise SceneValidationError(f"non-numeric component: {exc}", path) from exc


def _parse_pose(node, path: str, strict: bool) -> Pose:
    if not isinstance(node, dict):
        raise SceneValidationError("expected a pose object", path)
    _check_keys(node, _POSE_KEYS, path, strict)
    position = _parse_vec3(node.get("position", [0.0, 0.0, 0.0]), f"{path}.position")
    orientation = _parse_quat(
        node.get("orientation", [1.0, 0.0, 0.0, 0.0]), f"{path}.orientation"
    )
    return Pose(position, orientation)


def _parse_shape(node, path: str, strict: bool) -> ShapePrimitive:
    if not isinstance(node, dict):
        raise SceneValidationError("expected a shape object", path)
    _check_keys(node, _SHAPE_KEYS, path, strict)
    kind = _require(node, "kind", path)
    dims = _require(node, "dims", f"{path}.dims")
    if not isinstance(dims, (list, tuple)):
        raise SceneValidationError("dims must be a list", f"{path}.dims")
    offset = _parse_pose(node["offset"], f"{path}.offset", strict) if "offset" in node else Pose()
    try:
        return ShapePrimitive(kind=kind, dims=tuple(float(d) for d in dims), offset=offset)
    except (TypeError, ValueError) as exc:
        raise SceneValidationError(f"bad dims: {exc}", f"{path}.dims") from exc
    except SceneValidationError as exc:
        raise SceneValidationError(exc.message, path) from exc


def _parse_object(node, path: str, strict: bool) -> SceneObject:
    if not isinstance(node, dict):
        raise SceneValidationError("expected an object entry", path)
    _check_keys(node, _OBJECT_KEYS, path, strict)
    object_id = _require(node, "id", path)
    if not isinstance(object_id, str):
        raise SceneValidationError("id must be a string", f"{path}.id")
    label = node.get("label", object_id)
    static = bool(node.get("static", False))
    mass = float(node.get("mass", 0.0))
    pose = _parse_pose(node["pose"], f"{path}.pose", strict) if "pose" in node else Pose()
    shapes_node = _require(node, "shapes", path)
    if not isinstance(shapes_node, list) or not shapes_node:
        raise SceneValidationError("shapes must be a nonempty list", f"{path}.shapes")
    shapes = tuple(
        _parse_shape(s, f"{path}.shapes[{i}]", strict) for i, s in enumerate(shapes_node)
    )
    attributes = node.get("attributes", {})
    if not isinstance(attributes, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in attributes.items()
    ):
        raise SceneValidationError(
            "attributes must map strings to strings", f"{path}.attributes"
        )
    try:
        return SceneObject(
            id=object_id,
            label=str(label),
            shapes=shapes,
            pose=pose,
            mass=mass,
            static=static,
            attributes=dict(attributes),
        )
    except SceneValidationError as exc:
        raise SceneValidationError(exc.message, path) from exc


def parse_scene(document: str | dict, strict: bool = True) -> Scene:
    """Parse and validate a scene document (JSON text or already-decoded tree).

    Raises:
        SceneValidationError: naming the offending field and its location.
    """
    if isinstance(document, str):
        try:
            tree = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SceneValidationError(f"invalid JSON: {exc}", "document") from exc
    else:
        tree = document
    if not isinstance(tree, dict):
        raise SceneValidationError("top level must be an object", "document")
    _check_keys(tree, _SCENE_KEYS, "document", strict)

    ws_node = _require(tree, "workspace", "workspace")
    if not isinstance(ws_node, dict):
        raise SceneValidationError("expected {min, max}", "workspace")
    _check_keys(ws_node, _WORKSPACE_KEYS, "workspace", strict)
    workspace = Aabb(
        _parse_vec3(_require(ws_node, "min", "workspace.min"), "workspace.min"),
        _parse_vec3(_require(ws_node, "max", "workspace.max"), "workspace.max"),
    )

    objects_node = tree.get("objects", [])
    if not isinstance(objects_node, list):
        raise SceneValidationError("objects must be a list", "objects")
    objects = tuple(
        _parse_object(o, f"objects[{i}]", strict) for i, o in enumerate(objects_node)
    )

    placement = _parse_object(
        _require(tree, "placement_object", "placement_object"), "placement_object", strict
    )

    gravity = float(tree.get("gravity", DEFAULT_GRAVITY))
    return Scene(
        objects=objects, placement_object=placement, workspace=workspace, gravity=gravity
    )


def _pose_to_node(pose: Pose) -> dict:
    return {
        "position": [pose.position.x, pose.position.y, pose.position.z],
        "orientation": [
            pose.orientation.w,
            pose.orientation.x,
            pose.orientation.y,
            pose.orientation.z,
        ],
    }


def _object_to_node(obj: SceneObject) -> dict:
    return {
        "id": obj.id,
        "label": obj.label,
        "static": obj.static,
        "mass": obj.mass,
        "pose": _pose_to_node(obj.pose),
        "shapes": [
            {"kind": s.kind, "dims": list(s.dims), "offset": _pose_to_node(s.offset)}
            for s in obj.shapes
        ],
        "attributes": dict(obj.attributes),
    }


def scene_to_document(scene: Scene) -> dict:
    """Inverse of parse_scene; parse(scene_to_document(s)) == s."""
    return {
        "objects": [_object_to_node(o) for o in scene.objects],
        "placement_object": _object_to_node(scene.placement_object),
        "workspace": {
            "min": [scene.workspace.min.x, scene.workspace.min.y, scene.workspace.min.z],
            "max": [scene.workspace.max.x, scene.workspace.max.y, scene.workspace.max.z],
        },
        "gravity": scene.gravity,
    }


def serialize_scene(scene: Scene) -> str:
    return json.dumps(scene_to_document(scene), indent=2, sort_keys=True)
