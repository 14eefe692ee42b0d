/**
 * Annotation state: the marker and anti-marker layers, the user-facing
 * solver knobs, and the staleness of the current overlay.
 *
 * The two layers never share a pixel (placements on the opposite layer
 * are rejected with a warning, mirroring the server's 422 rule), and any
 * edit to markers or parameters marks the overlay stale until the next
 * server result arrives. The UI never computes masks locally.
 */

import type { MarkersPayload, ParamsPayload } from './api.js';
import type { PixelIndex } from './coords.js';

export type Tool = 'point' | 'scribble' | 'anti';

export interface UiParams {
  lambda: number;
  theta: number;
  mode: 'geodesic' | 'euclidean' | 'weighted';
  smoothIters: number;
}

export const DEFAULT_PARAMS: UiParams = {
  lambda: 5,
  theta: 5,
  mode: 'geodesic',
  smoothIters: 100,
};

export interface PlacementResult {
  placed: number;
  rejected: number;
}

const key = (p: PixelIndex) => `${p.i},${p.j}`;
const unkey = (s: string): PixelIndex => {
  const [i, j] = s.split(',').map(Number);
  return { i, j };
};

export class AnnotationState {
  readonly markers = new Set<string>();
  readonly antiMarkers = new Set<string>();
  params: UiParams = { ...DEFAULT_PARAMS };
  stale = true;
  paramsDirty = true;
  lastWarning: string | null = null;

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  get canSegment(): boolean {
    return this.markers.size > 0;
  }

  private inBounds(p: PixelIndex): boolean {
    return p.i >= 0 && p.i < this.width && p.j >= 0 && p.j < this.height;
  }

  /** Place one pixel on the layer the tool addresses. Placing on the
   * opposite layer's pixel is a warned no-op. */
  placeMarker(p: PixelIndex, tool: Tool): boolean {
    this.lastWarning = null;
    if (!this.inBounds(p)) {
      this.lastWarning = 'outside the image';
      return false;
    }
    const k = key(p);
    const [own, other] =
      tool === 'anti' ? [this.antiMarkers, this.markers] : [this.markers, this.antiMarkers];
    if (other.has(k)) {
      this.lastWarning =
        tool === 'anti'
          ? 'pixel already carries a marker'
          : 'pixel already carries an anti-marker';
      return false;
    }
    if (!own.has(k)) {
      own.add(k);
      this.stale = true;
    }
    return true;
  }

  /** Place a rasterized scribble; conflicting pixels are skipped. */
  placeScribble(pixels: PixelIndex[], tool: Tool): PlacementResult {
    let placed = 0;
    let rejected = 0;
    for (const p of pixels) {
      if (this.placeMarker(p, tool)) placed += 1;
      else rejected += 1;
    }
    if (rejected > 0) {
      this.lastWarning = `${rejected} pixel(s) skipped (other layer or out of bounds)`;
    } else {
      this.lastWarning = null;
    }
    return { placed, rejected };
  }

  removeNearest(p: PixelIndex, radius = 3): boolean {
    let bestKey: string | null = null;
    let bestLayer: Set<string> | null = null;
    let bestDist = radius * radius + 1;
    for (const layer of [this.markers, this.antiMarkers]) {
      for (const k of layer) {
        const q = unkey(k);
        const d = (q.i - p.i) ** 2 + (q.j - p.j) ** 2;
        if (d < bestDist) {
          bestDist = d;
          bestKey = k;
          bestLayer = layer;
        }
      }
    }
    if (bestKey && bestLayer) {
      bestLayer.delete(bestKey);
      this.stale = true;
      return true;
    }
    return false;
  }

  clearMarkers(): void {
    this.markers.clear();
    this.antiMarkers.clear();
    this.stale = true;
  }

  setParams(update: Partial<UiParams>): void {
    this.params = { ...this.params, ...update };
    this.stale = true;
    this.paramsDirty = true;
  }

  markerPixels(): PixelIndex[] {
    return [...this.markers].map(unkey);
  }

  antiMarkerPixels(): PixelIndex[] {
    return [...this.antiMarkers].map(unkey);
  }

  toMarkersPayload(): MarkersPayload {
    const sorted = (s: Set<string>) =>
      [...s]
        .map(unkey)
        .sort((a, b) => a.i - b.i || a.j - b.j)
        .map((p) => [p.i, p.j] as [number, number]);
    return { markers: sorted(this.markers), anti_markers: sorted(this.antiMarkers) };
  }

  toParamsPayload(): ParamsPayload {
    return {
      lambda: this.params.lambda,
      theta: this.params.theta,
      mode: this.params.mode,
      smooth_iters: this.params.smoothIters,
    };
  }

  /** Called when a fresh server result has been rendered. */
  markFresh(): void {
    this.stale = false;
    this.paramsDirty = false;
  }
}
