/** Thin canvas drawing over the prepared view models. */

import { gridMax, heatColor, type DensityGrid } from "./grid.js";
import { makeViewport, type Rect } from "./projection.js";
import type { CandidateMarker, SceneView } from "./viewmodel.js";

function drawOutlines(
  ctx: CanvasRenderingContext2D,
  rects: Rect[],
  toCanvas: (x: number, y: number) => [number, number],
): void {
  ctx.strokeStyle = "#e8e8e8";
  ctx.lineWidth = 1;
  ctx.font = "10px sans-serif";
  ctx.fillStyle = "#e8e8e8";
  for (const rect of rects) {
    const [cx0, cy0] = toCanvas(rect.x0, rect.y0);
    const [cx1, cy1] = toCanvas(rect.x1, rect.y1);
    ctx.strokeRect(
      Math.min(cx0, cx1),
      Math.min(cy0, cy1),
      Math.abs(cx1 - cx0),
      Math.abs(cy1 - cy0),
    );
    ctx.fillText(rect.label, Math.min(cx0, cx1) + 2, Math.min(cy0, cy1) - 2);
  }
}

export function renderTopDown(
  canvas: HTMLCanvasElement,
  scene: SceneView,
  grid: DensityGrid | null,
  markers: CandidateMarker[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.fillStyle = "#101018";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const ws = scene.workspace;
  const viewport = makeViewport(
    [ws.min[0], ws.min[1]],
    [ws.max[0], ws.max[1]],
    canvas.width,
    canvas.height,
  );

  if (grid) {
    const max = gridMax(grid);
    const [nx, ny, nz] = grid.dims;
    const cellW = grid.spacing[0] * viewport.scale;
    const cellH = grid.spacing[1] * viewport.scale;
    for (let ix = 0; ix < nx; ix++) {
      for (let iy = 0; iy < ny; iy++) {
        const value = grid.values[(ix * ny + iy) * nz];
        const [r, g, b] = heatColor(value, max);
        const [cx, cy] = viewport.toCanvas(
          grid.origin[0] + ix * grid.spacing[0],
          grid.origin[1] + iy * grid.spacing[1],
        );
        ctx.fillStyle = `rgb(${r},${g},${b})`;
        ctx.fillRect(cx - cellW / 2, cy - cellH / 2, cellW + 1, cellH + 1);
      }
    }
  }

  drawOutlines(ctx, scene.topDown, (x, y) => viewport.toCanvas(x, y));

  for (const placed of scene.placed) {
    const [cx, cy] = viewport.toCanvas(placed[0], placed[1]);
    ctx.fillStyle = "#7CFC91";
    ctx.beginPath();
    ctx.arc(cx, cy, 5, 0, 2 * Math.PI);
    ctx.fill();
  }

  ctx.font = "11px sans-serif";
  for (const marker of markers) {
    const [cx, cy] = viewport.toCanvas(marker.x, marker.y);
    ctx.fillStyle = "#ff5050";
    ctx.beginPath();
    ctx.arc(cx, cy, 3, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(marker.label, cx + 4, cy - 4);
  }
}

export function renderSide(canvas: HTMLCanvasElement, scene: SceneView): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.fillStyle = "#101018";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const ws = scene.workspace;
  const viewport = makeViewport(
    [ws.min[0], ws.min[2]],
    [ws.max[0], Math.max(ws.max[2], ws.min[2] + 0.05)],
    canvas.width,
    canvas.height,
  );
  drawOutlines(ctx, scene.side, (x, z) => viewport.toCanvas(x, z));
}
