/**
 * Orthographic projections used by the two scene views: top-down (x/y)
 * and side (x/z). Object outlines are axis-aligned bounds of the posed
 * shapes; this is presentation geometry, not physics.
 */

import type { ObjectNode, SceneDocument, ShapeNode } from "./api.js";

export interface Rect {
  id: string;
  label: string;
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

type Vec3 = [number, number, number];

function quatToMatrix(q: [number, number, number, number]): number[][] {
  const [w, x, y, z] = q;
  return [
    [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
    [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
    [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
  ];
}

function apply(m: number[][], v: Vec3): Vec3 {
  return [
    m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
    m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
    m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
  ];
}

function shapeCorners(shape: ShapeNode, objectPose: ObjectNode["pose"]): Vec3[] {
  const half: Vec3 =
    shape.kind === "box"
      ? [shape.dims[0], shape.dims[1], shape.dims[2]]
      : [shape.dims[0], shape.dims[0], shape.dims[1]];
  const shapeRot = quatToMatrix(shape.offset.orientation);
  const objRot = quatToMatrix(objectPose.orientation);
  const corners: Vec3[] = [];
  for (const sx of [-1, 1]) {
    for (const sy of [-1, 1]) {
      for (const sz of [-1, 1]) {
        const local: Vec3 = [sx * half[0], sy * half[1], sz * half[2]];
        const inObject = apply(shapeRot, local).map(
          (v, i) => v + shape.offset.position[i],
        ) as Vec3;
        const world = apply(objRot, inObject).map(
          (v, i) => v + objectPose.position[i],
        ) as Vec3;
        corners.push(world);
      }
    }
  }
  return corners;
}

export function objectBounds(object: ObjectNode): { min: Vec3; max: Vec3 } {
  const min: Vec3 = [Infinity, Infinity, Infinity];
  const max: Vec3 = [-Infinity, -Infinity, -Infinity];
  for (const shape of object.shapes) {
    for (const corner of shapeCorners(shape, object.pose)) {
      for (let i = 0; i < 3; i++) {
        min[i] = Math.min(min[i], corner[i]);
        max[i] = Math.max(max[i], corner[i]);
      }
    }
  }
  return { min, max };
}

export function topDownOutlines(scene: SceneDocument): Rect[] {
  return scene.objects.map((object) => {
    const { min, max } = objectBounds(object);
    return {
      id: object.id,
      label: object.label,
      x0: min[0],
      y0: min[1],
      x1: max[0],
      y1: max[1],
    };
  });
}

export function sideOutlines(scene: SceneDocument): Rect[] {
  return scene.objects.map((object) => {
    const { min, max } = objectBounds(object);
    return {
      id: object.id,
      label: object.label,
      x0: min[0],
      y0: min[2],
      x1: max[0],
      y1: max[2],
    };
  });
}

/** Maps workspace coordinates onto a canvas, y flipped, with padding. */
export interface Viewport {
  toCanvas(x: number, y: number): [number, number];
  scale: number;
}

export function makeViewport(
  worldMin: [number, number],
  worldMax: [number, number],
  canvasWidth: number,
  canvasHeight: number,
  padding = 10,
): Viewport {
  const spanX = worldMax[0] - worldMin[0];
  const spanY = worldMax[1] - worldMin[1];
  const scale = Math.min(
    (canvasWidth - 2 * padding) / spanX,
    (canvasHeight - 2 * padding) / spanY,
  );
  return {
    scale,
    toCanvas(x: number, y: number): [number, number] {
      return [
        padding + (x - worldMin[0]) * scale,
        canvasHeight - padding - (y - worldMin[1]) * scale,
      ];
    },
  };
}
