/** Editable closed polygon in unit coordinates plus the canvas mapping.
 *
 * Unit space has its origin at the BOTTOM-left, matching the wire
 * format and the physics; canvas pixels have theirs at the top-left,
 * so the y axis flips in the transforms below and nowhere else.
 */

import type { Pt } from "./raster.js";

export interface CanvasMap {
  width: number;
  height: number;
}

export function unitToCanvas(p: Pt, map: CanvasMap): Pt {
  return { x: p.x * map.width, y: (1 - p.y) * map.height };
}

export function canvasToUnit(p: Pt, map: CanvasMap): Pt {
  return { x: p.x / map.width, y: 1 - p.y / map.height };
}

export function pointInPolygon(p: Pt, points: Pt[]): boolean {
  let inside = false;
  const n = points.length;
  for (let i = 0, j = n - 1; i < n; j = i++) {
    const a = points[i];
    const b = points[j];
    if (a.y > p.y !== b.y > p.y) {
      const x = a.x + ((p.y - a.y) / (b.y - a.y)) * (b.x - a.x);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

function dist2(a: Pt, b: Pt): number {
  const dx = a.x - b.x;
  const dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/** Index of the vertex within `radius` of p, or -1. */
export function hitVertex(p: Pt, points: Pt[], radius: number): number {
  let best = -1;
  let bestD = radius * radius;
  for (let i = 0; i < points.length; i++) {
    const d = dist2(p, points[i]);
    if (d <= bestD) {
      best = i;
      bestD = d;
    }
  }
  return best;
}

/** Index of the edge whose segment passes within `radius` of p, or -1. */
export function hitEdge(p: Pt, points: Pt[], radius: number): number {
  let best = -1;
  let bestD = radius * radius;
  const n = points.length;
  for (let i = 0; i < n; i++) {
    const a = points[i];
    const b = points[(i + 1) % n];
    const lx = b.x - a.x;
    const ly = b.y - a.y;
    const len2 = lx * lx + ly * ly;
    let t = len2 > 0 ? ((p.x - a.x) * lx + (p.y - a.y) * ly) / len2 : 0;
    t = Math.max(0, Math.min(1, t));
    const q = { x: a.x + t * lx, y: a.y + t * ly };
    const d = dist2(p, q);
    if (d <= bestD) {
      best = i;
      bestD = d;
    }
  }
  return best;
}

export function insertVertexAfter(points: Pt[], edge: number, p: Pt): Pt[] {
  const out = points.slice();
  out.splice(edge + 1, 0, { ...p });
  return out;
}

export function removeVertex(points: Pt[], index: number): Pt[] {
  if (points.length <= 3) return points;
  const out = points.slice();
  out.splice(index, 1);
  return out;
}

export function moveVertex(points: Pt[], index: number, p: Pt): Pt[] {
  const out = points.slice();
  const clamp = (v: number) => Math.max(0, Math.min(1, v));
  out[index] = { x: clamp(p.x), y: clamp(p.y) };
  return out;
}

/** Blobby random polygon: jittered radii around a circle, lightly smoothed. */
export function randomPolygon(rand: () => number, vertices = 10): Pt[] {
  const radii: number[] = [];
  for (let i = 0; i < vertices; i++) radii.push(0.18 + 0.22 * rand());
  const smooth = radii.map((_, i) => {
    const a = radii[(i + vertices - 1) % vertices];
    const b = radii[i];
    const c = radii[(i + 1) % vertices];
    return (a + 2 * b + c) / 4;
  });
  const cx = 0.42 + 0.16 * rand();
  const cy = 0.42 + 0.16 * rand();
  const pts: Pt[] = [];
  for (let i = 0; i < vertices; i++) {
    const ang = (2 * Math.PI * i) / vertices;
    pts.push({
      x: Math.min(0.98, Math.max(0.02, cx + smooth[i] * Math.cos(ang))),
      y: Math.min(0.98, Math.max(0.02, cy + smooth[i] * Math.sin(ang))),
    });
  }
  return pts;
}
