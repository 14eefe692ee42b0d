import { describe, expect, it } from 'vitest';

import {
  displayToPixel,
  fitTransform,
  inImage,
  pixelToDisplay,
  zoomAt,
  type ViewTransform,
} from '../src/coords.js';

describe('display/pixel round trip', () => {
  const zooms = [0.25, 0.8, 1.0, 2.5, 7.0, 23.0];

  it('moves a display point by at most half a rendered pixel', () => {
    for (const scale of zooms) {
      const t: ViewTransform = { scale, offsetX: 13.7, offsetY: -4.2 };
      for (let k = 0; k < 200; k++) {
        const p = { x: 13.7 + (k * 37.1) % 500, y: -4.2 + (k * 11.3) % 400 };
        const px = displayToPixel(p, t);
        const back = pixelToDisplay(px, t);
        expect(Math.abs(back.x - p.x)).toBeLessThanOrEqual(0.5 * scale + 1e-9);
        expect(Math.abs(back.y - p.y)).toBeLessThanOrEqual(0.5 * scale + 1e-9);
      }
    }
  });

  it('is idempotent after the first snap', () => {
    for (const scale of zooms) {
      const t: ViewTransform = { scale, offsetX: 3, offsetY: 9 };
      const px = displayToPixel({ x: 101.3, y: 57.9 }, t);
      const again = displayToPixel(pixelToDisplay(px, t), t);
      expect(again).toEqual(px);
    }
  });

  it('maps pixel centers exactly', () => {
    const t: ViewTransform = { scale: 4, offsetX: 10, offsetY: 20 };
    expect(pixelToDisplay({ i: 0, j: 0 }, t)).toEqual({ x: 12, y: 22 });
    expect(displayToPixel({ x: 12, y: 22 }, t)).toEqual({ i: 0, j: 0 });
  });
});

describe('fitTransform', () => {
  it('contains the whole image', () => {
    const t = fitTransform(128, 128, 860, 640);
    expect(t.scale).toBe(5);
    expect(t.offsetX).toBe((860 - 640) / 2);
    expect(t.offsetY).toBe(0);
  });

  it('centers a wide image vertically', () => {
    const t = fitTransform(200, 50, 400, 400);
    expect(t.scale).toBe(2);
    expect(t.offsetY).toBe((400 - 100) / 2);
  });
});

describe('zoomAt', () => {
  it('keeps the anchor display point on the same image location', () => {
    const t: ViewTransform = { scale: 2, offsetX: 5, offsetY: 5 };
    const anchor = { x: 100, y: 80 };
    const before = {
      x: (anchor.x - t.offsetX) / t.scale,
      y: (anchor.y - t.offsetY) / t.scale,
    };
    const zoomed = zoomAt(t, 1.5, anchor);
    const after = {
      x: (anchor.x - zoomed.offsetX) / zoomed.scale,
      y: (anchor.y - zoomed.offsetY) / zoomed.scale,
    };
    expect(after.x).toBeCloseTo(before.x, 10);
    expect(after.y).toBeCloseTo(before.y, 10);
  });

  it('clamps the scale range', () => {
    const t: ViewTransform = { scale: 60, offsetX: 0, offsetY: 0 };
    expect(zoomAt(t, 10, { x: 0, y: 0 }).scale).toBe(64);
  });
});

describe('inImage', () => {
  it('checks bounds', () => {
    expect(inImage({ i: 0, j: 0 }, 4, 4)).toBe(true);
    expect(inImage({ i: 4, j: 0 }, 4, 4)).toBe(false);
    expect(inImage({ i: 0, j: -1 }, 4, 4)).toBe(false);
  });
});
