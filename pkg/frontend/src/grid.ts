/**
 * Decoder for the service's binary density grid.
 *
 * Layout (little endian): 8-byte magic "PKDG001\0", dims as 3 int64,
 * origin as 3 float64, spacing as 3 float64, then nx*ny*nz float64
 * densities in C order (z fastest).
 */

const MAGIC = "PKDG001\0";

export interface DensityGrid {
  dims: [number, number, number];
  origin: [number, number, number];
  spacing: [number, number, number];
  values: Float64Array;
}

export class GridFormatError extends Error {}

export function decodeGrid(buffer: ArrayBuffer): DensityGrid {
  if (buffer.byteLength < 8 + 3 * 8 + 6 * 8) {
    throw new GridFormatError("density grid payload truncated");
  }
  const magic = new TextDecoder("latin1").decode(new Uint8Array(buffer, 0, 8));
  if (magic !== MAGIC) {
    throw new GridFormatError("bad density grid magic");
  }
  const view = new DataView(buffer);
  let offset = 8;
  const dims: number[] = [];
  for (let i = 0; i < 3; i++) {
    const value = view.getBigInt64(offset, true);
    if (value < 0n || value > 1n << 32n) {
      throw new GridFormatError("unreasonable grid dimension");
    }
    dims.push(Number(value));
    offset += 8;
  }
  const origin: number[] = [];
  for (let i = 0; i < 3; i++) {
    origin.push(view.getFloat64(offset, true));
    offset += 8;
  }
  const spacing: number[] = [];
  for (let i = 0; i < 3; i++) {
    spacing.push(view.getFloat64(offset, true));
    offset += 8;
  }
  const count = dims[0] * dims[1] * dims[2];
  if (buffer.byteLength !== offset + count * 8) {
    throw new GridFormatError(
      `payload holds ${(buffer.byteLength - offset) / 8} values, header says ${count}`,
    );
  }
  const values = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    values[i] = view.getFloat64(offset + i * 8, true);
  }
  return {
    dims: dims as [number, number, number],
    origin: origin as [number, number, number],
    spacing: spacing as [number, number, number],
    values,
  };
}

export function gridValue(
  grid: DensityGrid,
  ix: number,
  iy: number,
  iz = 0,
): number {
  const [, ny, nz] = grid.dims;
  return grid.values[(ix * ny + iy) * nz + iz];
}

export function gridMax(grid: DensityGrid): number {
  let max = 0;
  for (const v of grid.values) if (v > max) max = v;
  return max;
}

/** Simple dark-to-bright color ramp for the heatmap (presentation only). */
export function heatColor(value: number, max: number): [number, number, number] {
  if (max <= 0) return [20, 20, 40];
  const t = Math.min(1, Math.max(0, value / max));
  const r = Math.round(20 + 235 * Math.min(1, t * 1.6));
  const g = Math.round(20 + 180 * t * t);
  const b = Math.round(60 + 80 * (1 - t));
  return [r, g, b];
}
