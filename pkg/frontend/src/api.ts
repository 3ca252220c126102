import type { Annotation, AnnotationDraft, Dashboard, ExemplarPage, SessionInfo } from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** What the app needs from the service; lets tests substitute a fake. */
export interface AuditApi {
  session(): Promise<SessionInfo>;
  exemplars(percentile: number, page: number, attr?: string, verdict?: string): Promise<ExemplarPage>;
  dashboard(percentile: number): Promise<Dashboard>;
  history(exampleId: string): Promise<{ example_id: string; history: Annotation[] }>;
  annotate(draft: AnnotationDraft): Promise<{ annotation_id: string }>;
}

/** Thin typed client over the audit service. A fetch implementation is
 * injected so tests can run without a server. */
export class ApiClient implements AuditApi {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string, params?: Record<string, string | number | undefined>): Promise<T> {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== undefined) query.set(key, String(value));
    }
    const suffix = query.size > 0 ? `?${query.toString()}` : '';
    const resp = await this.fetchImpl(`${this.baseUrl}${path}${suffix}`);
    if (!resp.ok) throw new ApiError(resp.status, await errorDetail(resp));
    return resp.json() as Promise<T>;
  }

  session(): Promise<SessionInfo> {
    return this.get('/session');
  }

  exemplars(percentile: number, page: number, attr?: string, verdict?: string): Promise<ExemplarPage> {
    return this.get('/exemplars', { percentile, page, attr, verdict });
  }

  dashboard(percentile: number): Promise<Dashboard> {
    return this.get('/dashboard', { percentile });
  }

  history(exampleId: string): Promise<{ example_id: string; history: Annotation[] }> {
    return this.get(`/annotations/history/${encodeURIComponent(exampleId)}`);
  }

  async annotate(draft: AnnotationDraft): Promise<{ annotation_id: string }> {
    const resp = await this.fetchImpl(`${this.baseUrl}/annotations`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(draft),
    });
    if (!resp.ok) throw new ApiError(resp.status, await errorDetail(resp));
    return resp.json();
  }
}

async function errorDetail(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    if (body && typeof body.detail === 'string') return body.detail;
    return JSON.stringify(body);
  } catch {
    return `HTTP ${resp.status}`;
  }
}
