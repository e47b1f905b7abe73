import numpy as np
import pytest

from placekit.geometry import Aabb, Pose, UnitQuat, Vec3
from placekit.scene import Scene, SceneObject, ShapePrimitive


def box(kind_dims, offset_pos=(0.0, 0.0, 0.0), offset_quat=(1.0, 0.0, 0.0, 0.0)):
    return ShapePrimitive(
        kind="box",
        dims=tuple(kind_dims),
        offset=Pose(Vec3(*offset_pos), UnitQuat(*offset_quat)),
    )


def make_object(
    object_id,
    shapes,
    label=None,
    position=(0.0, 0.0, 0.0),
    orientation=(1.0, 0.0, 0.0, 0.0),
    mass=1.0,
    static=False,
    attributes=None,
):
    return SceneObject(
        id=object_id,
        label=label or object_id,
        shapes=tuple(shapes),
        pose=Pose(Vec3(*position), UnitQuat(*orientation)),
        mass=mass,
        static=static,
        attributes=attributes or {},
    )


def make_scene(objects, placement, workspace_min, workspace_max, gravity=9.81):
    return Scene(
        objects=tuple(objects),
        placement_object=placement,
        workspace=Aabb(Vec3(*workspace_min), Vec3(*workspace_max)),
        gravity=gravity,
    )


@pytest.fixture
def cube_on_table_scene():
    """A 1 x 1 m table slab with a 0.1 m cube to place; table top at z = 0."""
    table = make_object(
        "table",
        [box((0.5, 0.5, 0.025))],
        position=(0.0, 0.0, -0.025),
        static=True,
    )
    cube = make_object("cube", [box((0.05, 0.05, 0.05))], mass=0.5)
    return make_scene(
        [table], cube, workspace_min=(-0.45, -0.45, -0.2), workspace_max=(0.45, 0.45, 0.4)
    )


@pytest.fixture
def small_table_scene():
    """A 0.3 x 0.3 m slab centered at origin, top at z = 0, cube placement.

    The workspace extends past the table edge so overhang and free-fall
    points exist.
    """
    table = make_object(
        "table",
        [box((0.15, 0.15, 0.05))],
        position=(0.0, 0.0, -0.05),
        static=True,
    )
    cube = make_object("cube", [box((0.05, 0.05, 0.05))], mass=0.5)
    return make_scene(
        [table], cube, workspace_min=(-0.4, -0.4, -0.3), workspace_max=(0.4, 0.4, 0.4)
    )


def brute_force_support_top(scene, x, y, z_lo, z_hi, step=1e-4):
    """Oracle: scan the vertical line for the highest point inside any static solid."""
    best = None
    for obj in scene.objects:
        if not obj.static:
            continue
        for shape in obj.shapes:
            world = obj.pose.compose(shape.offset)
            rot = world.orientation.to_matrix()
            center = world.position.as_array()
            zs = np.arange(z_lo, z_hi + step, step)
            pts = np.column_stack([np.full_like(zs, x), np.full_like(zs, y), zs])
            local = (pts - center) @ rot
            if shape.kind == "box":
                half = np.array(shape.dims)
                inside = np.all(np.abs(local) <= half + 1e-12, axis=1)
            else:
                r, hh = shape.dims
                inside = (local[:, 0] ** 2 + local[:, 1] ** 2 <= r * r + 1e-12) & (
                    np.abs(local[:, 2]) <= hh + 1e-12
                )
            if inside.any():
                top = zs[inside].max()
                best = top if best is None else max(best, top)
    return best
