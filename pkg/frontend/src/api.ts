// Typed client for the /api/v1 surface. The base URL is the single piece
// of configuration the frontend takes.

import type {
  NodeDetail,
  NodesResponse,
  PathResponse,
  RecommendationsResponse,
  SearchHit,
  TeamingTurnResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(private baseUrl: string = '/api/v1') {}

  private async get<T>(path: string, params?: Record<string, string>): Promise<T> {
    const url = new URL(this.baseUrl + path, globalThis.location?.href ?? 'http://localhost');
    for (const [key, value] of Object.entries(params ?? {})) {
      url.searchParams.set(key, value);
    }
    const resp = await fetch(url.toString());
    if (!resp.ok) {
      throw new ApiError(resp.status, `${path}: ${resp.status} ${await resp.text()}`);
    }
    return (await resp.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const url = new URL(this.baseUrl + path, globalThis.location?.href ?? 'http://localhost');
    const resp = await fetch(url.toString(), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, `${path}: ${resp.status} ${await resp.text()}`);
    }
    return (await resp.json()) as T;
  }

  healthz(): Promise<{ status: string; snapshot: string }> {
    return this.get('/healthz');
  }

  meta(): Promise<Record<string, unknown>> {
    return this.get('/meta');
  }

  // one cold-start fetch of the whole node field; panning and zooming then
  // run entirely client-side
  fetchAllNodes(limit = 50000): Promise<NodesResponse> {
    return this.get('/nodes', { bbox: '-1e8,-1e8,1e8,1e8', limit: String(limit) });
  }

  queryNodes(params: Record<string, string>): Promise<NodesResponse> {
    return this.get('/nodes', params);
  }

  search(q: string, kinds?: string): Promise<{ results: SearchHit[] }> {
    const params: Record<string, string> = { q };
    if (kinds) params.kinds = kinds;
    return this.get('/search', params);
  }

  node(id: string): Promise<NodeDetail> {
    return this.get(`/node/${encodeURIComponent(id)}`);
  }

  recommendations(id: string, justify?: string): Promise<RecommendationsResponse> {
    const params: Record<string, string> = {};
    if (justify) params.justify = justify;
    return this.get(`/node/${encodeURIComponent(id)}/recommendations`, params);
  }

  collaborators(id: string): Promise<{ author_id: string; collaborator_ids: string[] }> {
    return this.get(`/node/${encodeURIComponent(id)}/collaborators`);
  }

  path(from: string, to: string): Promise<PathResponse> {
    return this.get('/path', { from, to });
  }

  teamingMessage(
    sessionId: string,
    body: { message: string; author_id?: string; ab_mode?: boolean; seed_paper_id?: string },
  ): Promise<TeamingTurnResponse> {
    return this.post(`/teaming/${encodeURIComponent(sessionId)}/message`, body);
  }

  feedback(
    sessionId: string,
    preferred: 'A' | 'B',
  ): Promise<{ recorded: boolean; preferred: string; backbone: string; overwrote: string | null }> {
    return this.post(`/teaming/${encodeURIComponent(sessionId)}/feedback`, { preferred });
  }
}
