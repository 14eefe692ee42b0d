/**
 * Display <-> image-pixel coordinate mapping under zoom and pan.
 *
 * Image pixel (i, j) covers the display square
 * [offsetX + i*scale, offsetX + (i+1)*scale) x [...j...), so snapping a
 * display point to a pixel and projecting the pixel center back moves the
 * point by at most half a rendered pixel (scale/2) in each axis.
 */

export interface ViewTransform {
  scale: number; // display pixels per image pixel
  offsetX: number;
  offsetY: number;
}

export interface DisplayPoint {
  x: number;
  y: number;
}

export interface PixelIndex {
  i: number;
  j: number;
}

export function displayToPixel(p: DisplayPoint, t: ViewTransform): PixelIndex {
  return {
    i: Math.floor((p.x - t.offsetX) / t.scale),
    j: Math.floor((p.y - t.offsetY) / t.scale),
  };
}

export function pixelToDisplay(px: PixelIndex, t: ViewTransform): DisplayPoint {
  return {
    x: t.offsetX + (px.i + 0.5) * t.scale,
    y: t.offsetY + (px.j + 0.5) * t.scale,
  };
}

export function inImage(px: PixelIndex, width: number, height: number): boolean {
  return px.i >= 0 && px.i < width && px.j >= 0 && px.j < height;
}

/** Fit the whole image into the viewport, centered. */
export function fitTransform(
  imageW: number,
  imageH: number,
  viewW: number,
  viewH: number,
): ViewTransform {
  const scale = Math.min(viewW / imageW, viewH / imageH);
  return {
    scale,
    offsetX: (viewW - imageW * scale) / 2,
    offsetY: (viewH - imageH * scale) / 2,
  };
}

/** Zoom by a factor keeping the given display point fixed. */
export function zoomAt(
  t: ViewTransform,
  factor: number,
  anchor: DisplayPoint,
): ViewTransform {
  const scale = Math.min(64, Math.max(0.05, t.scale * factor));
  const ratio = scale / t.scale;
  return {
    scale,
    offsetX: anchor.x - (anchor.x - t.offsetX) * ratio,
    offsetY: anchor.y - (anchor.y - t.offsetY) * ratio,
  };
}
