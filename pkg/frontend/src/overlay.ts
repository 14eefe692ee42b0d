/**
 * Canvas rendering of the annotation view: image, optional distance-map
 * underlay, semi-transparent mask overlay, marker layers. Pure drawing;
 * all state lives in AnnotationState.
 */

import type { ViewTransform } from './coords.js';
import { pixelToDisplay } from './coords.js';
import type { AnnotationState } from './state.js';

export interface OverlayLayers {
  image: ImageBitmap | null;
  underlay: ImageBitmap | null;
  mask: ImageBitmap | null;
  maskVisible: boolean;
}

const MARKER_COLOR = '#2ecc40'; // green
const ANTI_COLOR = '#ff6fb5'; // pink
const MASK_TINT = 'rgba(255, 80, 40, 0.45)';

/** Tint the white pixels of a mask bitmap; transparent elsewhere. */
export function tintMask(mask: ImageBitmap): HTMLCanvasElement {
  const canvas = document.createElement('canvas');
  canvas.width = mask.width;
  canvas.height = mask.height;
  const ctx = canvas.getContext('2d')!;
  ctx.drawImage(mask, 0, 0);
  const data = ctx.getImageData(0, 0, canvas.width, canvas.height);
  const px = data.data;
  for (let k = 0; k < px.length; k += 4) {
    const on = px[k] > 127;
    px[k] = 255;
    px[k + 1] = 80;
    px[k + 2] = 40;
    px[k + 3] = on ? 115 : 0;
  }
  ctx.putImageData(data, 0, 0);
  return canvas;
}

export function render(
  canvas: HTMLCanvasElement,
  layers: OverlayLayers,
  tinted: HTMLCanvasElement | null,
  state: AnnotationState | null,
  t: ViewTransform,
): void {
  const ctx = canvas.getContext('2d')!;
  ctx.save();
  ctx.fillStyle = '#181818';
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!layers.image) {
    ctx.restore();
    return;
  }
  ctx.imageSmoothingEnabled = t.scale < 1;
  const w = layers.image.width * t.scale;
  const h = layers.image.height * t.scale;
  ctx.drawImage(layers.image, t.offsetX, t.offsetY, w, h);
  if (layers.underlay) {
    ctx.globalAlpha = 0.65;
    ctx.drawImage(layers.underlay, t.offsetX, t.offsetY, w, h);
    ctx.globalAlpha = 1.0;
  }
  if (tinted && layers.maskVisible) {
    ctx.drawImage(tinted, t.offsetX, t.offsetY, w, h);
  }
  if (state) {
    drawMarkers(ctx, state, t);
  }
  ctx.restore();
}

function drawMarkers(
  ctx: CanvasRenderingContext2D,
  state: AnnotationState,
  t: ViewTransform,
): void {
  const radius = Math.max(2.5, t.scale * 0.45);
  ctx.lineWidth = 1.5;
  for (const [pixels, color] of [
    [state.markerPixels(), MARKER_COLOR],
    [state.antiMarkerPixels(), ANTI_COLOR],
  ] as const) {
    ctx.fillStyle = color;
    ctx.strokeStyle = '#10301a';
    for (const p of pixels) {
      const d = pixelToDisplay(p, t);
      ctx.beginPath();
      ctx.arc(d.x, d.y, radius, 0, 2 * Math.PI);
      ctx.fill();
      ctx.stroke();
    }
  }
}

export { MASK_TINT };
