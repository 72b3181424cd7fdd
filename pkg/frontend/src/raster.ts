/** Polygon rasterization onto the 64x64 occupancy grid.
 *
 * Grid convention matches the wire format: index row*64+col with row 0
 * at the BOTTOM, so y grows upward in both unit and grid space.  Canvas
 * flipping happens at the drawing layer, never here.
 */

import { GRID_SIZE } from "./protocol.js";

export interface Pt {
  x: number;
  y: number;
}

export const MIN_AREA_CELLS = 16;

/** Even-odd scanline fill sampled at cell centers. */
export function rasterizePolygon(points: Pt[], size = GRID_SIZE): Uint8Array {
  const cells = new Uint8Array(size * size);
  if (points.length < 3) return cells;
  const n = points.length;
  for (let row = 0; row < size; row++) {
    const y = (row + 0.5) / size;
    // gather x crossings of the horizontal line at this row
    const xs: number[] = [];
    for (let i = 0; i < n; i++) {
      const a = points[i];
      const b = points[(i + 1) % n];
      // half-open rule so a vertex on the line counts once
      if (a.y <= y === b.y <= y) continue;
      xs.push(a.x + ((y - a.y) / (b.y - a.y)) * (b.x - a.x));
    }
    xs.sort((p, q) => p - q);
    for (let k = 0; k + 1 < xs.length; k += 2) {
      let lo = Math.ceil(xs[k] * size - 0.5);
      let hi = Math.floor(xs[k + 1] * size - 0.5);
      if (lo < 0) lo = 0;
      if (hi > size - 1) hi = size - 1;
      for (let col = lo; col <= hi; col++) cells[row * size + col] = 1;
    }
  }
  return cells;
}

/** Number of occupied cells. */
export function cellCount(cells: Uint8Array): number {
  let n = 0;
  for (let i = 0; i < cells.length; i++) n += cells[i];
  return n;
}

/** True when the occupied cells form one 4-connected component. */
export function isSingleComponent(cells: Uint8Array, size = GRID_SIZE): boolean {
  const total = cellCount(cells);
  if (total === 0) return false;
  const seen = new Uint8Array(cells.length);
  const stack: number[] = [];
  for (let i = 0; i < cells.length; i++) {
    if (cells[i]) {
      stack.push(i);
      seen[i] = 1;
      break;
    }
  }
  let reached = 0;
  while (stack.length > 0) {
    const i = stack.pop() as number;
    reached++;
    const row = Math.floor(i / size);
    const col = i % size;
    const tryCell = (r: number, c: number) => {
      if (r < 0 || r >= size || c < 0 || c >= size) return;
      const j = r * size + c;
      if (cells[j] && !seen[j]) {
        seen[j] = 1;
        stack.push(j);
      }
    };
    tryCell(row - 1, col);
    tryCell(row + 1, col);
    tryCell(row, col - 1);
    tryCell(row, col + 1);
  }
  return reached === total;
}

export interface RasterResult {
  cells: Uint8Array;
  ok: boolean;
  problem: string | null;
}

/** Rasterize and check the server's shape invariants. */
export function rasterizeChecked(points: Pt[]): RasterResult {
  const cells = rasterizePolygon(points);
  const count = cellCount(cells);
  if (count < MIN_AREA_CELLS) {
    return { cells, ok: false, problem: `shape covers ${count} cells, needs ${MIN_AREA_CELLS}` };
  }
  if (!isSingleComponent(cells)) {
    return { cells, ok: false, problem: "shape splits into disconnected pieces" };
  }
  return { cells, ok: true, problem: null };
}

/** Unit position of a cell's center. */
export function cellCenter(row: number, col: number, size = GRID_SIZE): Pt {
  return { x: (col + 0.5) / size, y: (row + 0.5) / size };
}

/** Cell containing a unit position (clamped to the grid). */
export function cellAt(p: Pt, size = GRID_SIZE): { row: number; col: number } {
  const clamp = (v: number) => Math.min(size - 1, Math.max(0, Math.floor(v * size)));
  return { row: clamp(p.y), col: clamp(p.x) };
}
