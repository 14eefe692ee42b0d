/**
 * Annotator wiring: load an image into a session, click or scribble
 * markers (left tools) and anti-markers (pink), tune lambda/theta/mode/
 * smoothing, run the solver, inspect the overlay and distance maps,
 * refine, repeat.
 *
 * The overlay is always a byte-exact render of the most recent server
 * mask (its SHA-256 is shown in the debug line); any marker or parameter
 * edit flips the view to "stale" until the user reruns. One segment
 * request is in flight at most.
 */

import { ApiError, GeosegClient, sha256Hex } from './api.js';
import type { DistanceKind } from './api.js';
import {
  displayToPixel,
  fitTransform,
  inImage,
  zoomAt,
  type ViewTransform,
} from './coords.js';
import { rasterizeScribble } from './raster.js';
import { render, tintMask, type OverlayLayers } from './overlay.js';
import { AnnotationState, type Tool } from './state.js';

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const canvas = $('view') as unknown as HTMLCanvasElement;
const client = new GeosegClient('..'); // service mounts the UI at /ui

let sessionId: string | null = null;
let state: AnnotationState | null = null;
let transform: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };
let layers: OverlayLayers = {
  image: null,
  underlay: null,
  mask: null,
  maskVisible: true,
};
let tintedMask: HTMLCanvasElement | null = null;
let running = false;
let scribblePath: { i: number; j: number }[] | null = null;

function toast(message: string, isError = false): void {
  const el = $('toast');
  el.textContent = message;
  el.className = isError ? 'toast error' : 'toast';
  el.style.opacity = '1';
  window.setTimeout(() => (el.style.opacity = '0'), 3500);
}

function currentTool(): Tool {
  const checked = document.querySelector<HTMLInputElement>(
    'input[name="tool"]:checked',
  );
  return (checked?.value as Tool) ?? 'point';
}

function redraw(): void {
  render(canvas, layers, tintedMask, state, transform);
  const badge = $('stale-badge');
  badge.style.display = state?.stale && layers.mask ? 'inline-block' : 'none';
  ($('run') as HTMLButtonElement).disabled =
    running || !sessionId || !(state?.canSegment ?? false);
}

function setStatus(text: string): void {
  $('status').textContent = text;
}

async function loadImageFile(file: File): Promise<void> {
  try {
    const info = await client.createSession(file);
    sessionId = info.session_id;
    state = new AnnotationState(info.width, info.height);
    const bytes = await client.fetchImageBytes(sessionId);
    layers = {
      image: await createImageBitmap(new Blob([bytes], { type: 'image/png' })),
      underlay: null,
      mask: null,
      maskVisible: true,
    };
    tintedMask = null;
    transform = fitTransform(info.width, info.height, canvas.width, canvas.height);
    setStatus(`session ${sessionId.slice(0, 8)} — ${info.width}x${info.height}`);
    pushParams();
    redraw();
  } catch (err) {
    toast(`upload failed: ${(err as Error).message}`, true);
  }
}

function pushParams(): void {
  if (!sessionId || !state) return;
  state.setParams({
    lambda: Number(($('lambda') as HTMLInputElement).value),
    theta: Number(($('theta') as HTMLInputElement).value),
    mode: ($('mode') as HTMLSelectElement).value as 'geodesic' | 'euclidean' | 'weighted',
    smoothIters: Number(($('smooth-iters') as HTMLInputElement).value),
  });
  redraw();
}

async function runSegmentation(): Promise<void> {
  if (!sessionId || !state || running) return;
  running = true;
  redraw();
  setStatus('running…');
  try {
    await client.putMarkers(sessionId, state.toMarkersPayload());
    if (state.paramsDirty) {
      await client.putParams(sessionId, state.toParamsPayload());
    }
    const result = await client.segment(sessionId);
    const maskBytes = await client.fetchMaskBytes(sessionId);
    layers.mask = await createImageBitmap(
      new Blob([maskBytes], { type: 'image/png' }),
    );
    tintedMask = tintMask(layers.mask);
    state.markFresh();
    const hash = await sha256Hex(maskBytes);
    $('debug-hash').textContent = `mask sha256 ${hash.slice(0, 16)}…`;
    const tcPart = result.tc !== undefined ? `  TC=${result.tc.toFixed(4)}` : '';
    setStatus(
      `${result.iterations} iterations in ${result.seconds.toFixed(2)}s  ` +
        `c1=${result.c1.toFixed(3)} c2=${result.c2.toFixed(3)}` +
        `${result.bundle_rebuilt ? '  (distances rebuilt)' : ''}${tcPart}`,
    );
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      toast('a segmentation is already running for this session', true);
    } else {
      toast(`segmentation failed: ${(err as Error).message} — try again`, true);
    }
  } finally {
    running = false;
    redraw();
  }
}

async function toggleUnderlay(kind: string): Promise<void> {
  if (!sessionId) return;
  if (kind === 'none') {
    layers.underlay = null;
    redraw();
    return;
  }
  try {
    const bytes = await client.fetchDistanceBytes(sessionId, kind as DistanceKind);
    layers.underlay = await createImageBitmap(
      new Blob([bytes], { type: 'image/png' }),
    );
    redraw();
  } catch (err) {
    toast(`distance map unavailable: ${(err as Error).message}`, true);
    ($('underlay') as HTMLSelectElement).value = 'none';
  }
}

function canvasPoint(ev: MouseEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
}

function handlePlace(ev: MouseEvent): void {
  if (!state) return;
  const px = displayToPixel(canvasPoint(ev), transform);
  if (!inImage(px, state.width, state.height)) return;
  const tool = currentTool();
  if (tool === 'scribble') return; // handled by drag
  if (!state.placeMarker(px, tool) && state.lastWarning) {
    toast(state.lastWarning, true);
  }
  redraw();
}

canvas.addEventListener('mousedown', (ev) => {
  if (ev.button !== 0 || !state) return;
  if (currentTool() === 'scribble') {
    scribblePath = [displayToPixel(canvasPoint(ev), transform)];
  }
});

canvas.addEventListener('mousemove', (ev) => {
  if (scribblePath && state) {
    scribblePath.push(displayToPixel(canvasPoint(ev), transform));
  }
});

window.addEventListener('mouseup', (ev) => {
  if (scribblePath && state) {
    const pixels = rasterizeScribble(scribblePath).filter((p) =>
      inImage(p, state!.width, state!.height),
    );
    const res = state.placeScribble(pixels, 'point');
    if (res.rejected > 0 && state.lastWarning) toast(state.lastWarning, true);
    scribblePath = null;
    redraw();
  } else if (ev.target === canvas) {
    handlePlace(ev as MouseEvent);
  }
});

canvas.addEventListener('contextmenu', (ev) => {
  ev.preventDefault();
  if (!state) return;
  if (state.removeNearest(displayToPixel(canvasPoint(ev), transform))) {
    redraw();
  }
});

canvas.addEventListener('wheel', (ev) => {
  ev.preventDefault();
  transform = zoomAt(transform, ev.deltaY < 0 ? 1.2 : 1 / 1.2, canvasPoint(ev));
  redraw();
});

$('image-file').addEventListener('change', (ev) => {
  const input = ev.target as HTMLInputElement;
  if (input.files && input.files[0]) void loadImageFile(input.files[0]);
});

$('run').addEventListener('click', () => void runSegmentation());
$('clear').addEventListener('click', () => {
  state?.clearMarkers();
  redraw();
});
$('mask-visible').addEventListener('change', (ev) => {
  layers.maskVisible = (ev.target as HTMLInputElement).checked;
  redraw();
});
$('underlay').addEventListener('change', (ev) =>
  void toggleUnderlay((ev.target as HTMLSelectElement).value),
);
for (const id of ['lambda', 'theta', 'mode', 'smooth-iters']) {
  $(id).addEventListener('change', pushParams);
}

redraw();
setStatus('load a grayscale PNG or PGM to begin');
