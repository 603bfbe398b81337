/** Typed client for the ctxsearch session API. The console displays
 * whatever this client returns and never recomputes scores, query
 * strings, or counters on its own. */

export interface Metrics {
  queries: number;
  clicks: number;
  hits: number;
  urls: number;
  elapsed_ms: number | null;
}

export interface SenseRec {
  id: string;
  keyword: string;
  sense_id: string;
  words: string[];
  score: number;
  source: string;
}

export interface MetaRec {
  id: string;
  words: string[];
  score: number;
  source: string;
}

export interface ConceptRec {
  id: string;
  label: string;
  related_terms: string[];
  score: number;
  source: string;
}

export interface Hit {
  doc_id: number;
  url: string;
  title: string;
  score: number;
  rank: number;
}

export interface StagePayload {
  session_id: string;
  state: string;
  stage?: string;
  senses?: Record<string, SenseRec[]>;
  meta_keywords?: MetaRec[];
  concepts?: ConceptRec[];
  hits?: Hit[];
  query?: string;
  query_preview?: string;
  page?: number;
  metrics: Metrics;
}

export interface SessionInfo {
  session_id: string;
  user_id: string;
  phase: string;
  task_id: string;
  state: string;
  sckb_enabled: boolean;
}

export interface MetricsPayload {
  session_id: string;
  state: string;
  found: boolean | null;
  metrics: Metrics;
}

export interface ProfileEntryRow {
  entry_id: string;
  timestamp: number;
  raw_query: string;
  query_keywords: string[];
  clicked_urls: string[];
}

export interface ProfilePayload {
  user_id: string;
  entry_count: number;
  entries: ProfileEntryRow[];
}

export interface SckbStats {
  enabled: boolean;
  entry_count: number;
  contributor_total: number;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(private baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    const body = (await response.json()) as T & { error?: unknown };
    if (!response.ok) {
      const detail = typeof body.error === "string" ? body.error : JSON.stringify(body.error);
      throw new ApiError(detail ?? `HTTP ${response.status}`, response.status);
    }
    return body;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, { method: "POST", body: JSON.stringify(payload) });
  }

  createSession(userId: string, phase: string, taskId: string): Promise<SessionInfo> {
    return this.post("/sessions", { user_id: userId, phase, task_id: taskId });
  }

  submitQuery(sessionId: string, query: string): Promise<StagePayload> {
    return this.post(`/sessions/${sessionId}/query`, { query });
  }

  applySelection(sessionId: string, stage: string, chosen: string[]): Promise<StagePayload> {
    return this.post(`/sessions/${sessionId}/selections`, { stage, chosen });
  }

  getResults(sessionId: string, page: number): Promise<StagePayload> {
    return this.request(`/sessions/${sessionId}/results?page=${page}`);
  }

  reportClick(sessionId: string, url: string): Promise<{ metrics: Metrics }> {
    return this.post(`/sessions/${sessionId}/clicks`, { url });
  }

  complete(sessionId: string, found: boolean): Promise<MetricsPayload> {
    return this.post(`/sessions/${sessionId}/complete`, { found });
  }

  getMetrics(sessionId: string): Promise<MetricsPayload> {
    return this.request(`/sessions/${sessionId}/metrics`);
  }

  getProfile(userId: string): Promise<ProfilePayload> {
    return this.request(`/users/${encodeURIComponent(userId)}/profile`);
  }

  getSckbStats(): Promise<SckbStats> {
    return this.request("/sckb/stats");
  }
}
