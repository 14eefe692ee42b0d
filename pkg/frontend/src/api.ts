/**
 * Typed client for the geoseg annotation service.
 *
 * Every mutation returns the parsed JSON body or throws ApiError with the
 * HTTP status and the server's {"error": ...} message. The client holds
 * no segmentation state of its own: masks and distance maps are always
 * re-fetched as bytes from the server.
 */

export interface SessionInfo {
  session_id: string;
  width: number;
  height: number;
}

export interface MarkersPayload {
  markers: [number, number][];
  anti_markers: [number, number][];
}

export interface ParamsPayload {
  lambda?: number;
  theta?: number;
  mode?: 'geodesic' | 'euclidean' | 'weighted';
  smooth_iters?: number;
}

export interface SegmentResponse {
  iterations: number;
  converged: boolean;
  c1: number;
  c2: number;
  residual: number;
  bundle_rebuilt: boolean;
  seconds: number;
  tc?: number;
}

export type DistanceKind = 'euclidean' | 'geodesic' | 'anti' | 'combined';

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = (await resp.json()) as { error?: string };
    if (body.error) message = body.error;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  return new ApiError(resp.status, message);
}

export class GeosegClient {
  constructor(
    readonly baseUrl: string = '',
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!resp.ok) throw await parseError(resp);
    return resp;
  }

  async createSession(image: Blob, filename = 'image.png'): Promise<SessionInfo> {
    const form = new FormData();
    form.append('image', image, filename);
    const resp = await this.request('/sessions', { method: 'POST', body: form });
    return (await resp.json()) as SessionInfo;
  }

  async putMarkers(sessionId: string, payload: MarkersPayload): Promise<void> {
    await this.request(`/sessions/${sessionId}/markers`, {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    });
  }

  async putParams(sessionId: string, params: ParamsPayload): Promise<void> {
    await this.request(`/sessions/${sessionId}/params`, {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(params),
    });
  }

  async putGroundTruth(sessionId: string, mask: Blob): Promise<void> {
    const form = new FormData();
    form.append('mask', mask, 'gt.png');
    await this.request(`/sessions/${sessionId}/ground-truth`, {
      method: 'PUT',
      body: form,
    });
  }

  async segment(sessionId: string): Promise<SegmentResponse> {
    const resp = await this.request(`/sessions/${sessionId}/segment`, {
      method: 'POST',
    });
    return (await resp.json()) as SegmentResponse;
  }

  async fetchMaskBytes(sessionId: string): Promise<ArrayBuffer> {
    const resp = await this.request(`/sessions/${sessionId}/mask.png`);
    return resp.arrayBuffer();
  }

  async fetchImageBytes(sessionId: string): Promise<ArrayBuffer> {
    const resp = await this.request(`/sessions/${sessionId}/image.png`);
    return resp.arrayBuffer();
  }

  async fetchDistanceBytes(sessionId: string, kind: DistanceKind): Promise<ArrayBuffer> {
    const resp = await this.request(`/sessions/${sessionId}/distance/${kind}.png`);
    return resp.arrayBuffer();
  }

  async deleteSession(sessionId: string): Promise<void> {
    await this.request(`/sessions/${sessionId}`, { method: 'DELETE' });
  }
}

/** Hex SHA-256 of a response body, for the debug panel. */
export async function sha256Hex(bytes: ArrayBuffer): Promise<string> {
  const digest = await crypto.subtle.digest('SHA-256', bytes);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, '0'))
    .join('');
}
