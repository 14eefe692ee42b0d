/**
 * Scribble rasterization: a freehand path of snapped pixels becomes the
 * full connected pixel set of the polyline (Bresenham between successive
 * points), deduplicated in drawing order. The server receives the whole
 * set as individual markers.
 */

import type { PixelIndex } from './coords.js';

export function bresenhamLine(a: PixelIndex, b: PixelIndex): PixelIndex[] {
  const points: PixelIndex[] = [];
  let { i: x0, j: y0 } = a;
  const { i: x1, j: y1 } = b;
  const dx = Math.abs(x1 - x0);
  const dy = -Math.abs(y1 - y0);
  const sx = x0 < x1 ? 1 : -1;
  const sy = y0 < y1 ? 1 : -1;
  let err = dx + dy;
  for (;;) {
    points.push({ i: x0, j: y0 });
    if (x0 === x1 && y0 === y1) break;
    const e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
  return points;
}

export function rasterizeScribble(path: PixelIndex[]): PixelIndex[] {
  const seen = new Set<string>();
  const out: PixelIndex[] = [];
  const push = (p: PixelIndex) => {
    const key = `${p.i},${p.j}`;
    if (!seen.has(key)) {
      seen.add(key);
      out.push(p);
    }
  };
  for (let k = 0; k < path.length; k++) {
    if (k === 0) {
      push(path[0]);
    } else {
      for (const p of bresenhamLine(path[k - 1], path[k])) push(p);
    }
  }
  return out;
}
