/** Typed client for the gateway's public HTTP API (and nothing else). */

export interface EngineStatus {
  name: string;
  kind: string;
  status: "up" | "down";
  address: string;
  objects: number;
}

export interface StatusPayload {
  engines: EngineStatus[];
  uptime_s: number;
  queries_served: number;
}

export interface QueryTimings {
  parse_ms: number;
  plan_ms: number;
  execute_ms: number;
}

export interface QueryResult {
  schema: { name: string; type: string }[];
  rows: (string | number | null)[][];
  timings: QueryTimings;
}

export interface PlanStep {
  kind: "execute" | "migrate" | "cleanup";
  engine?: string;
  island?: string;
  output?: string;
  source?: string;
  dest_engine?: string;
  dest_island?: string;
  temp?: string;
  temps?: string[];
}

export interface ExplainPayload {
  steps: PlanStep[];
  final_output: string;
}

export interface ErrorPayload {
  error: string;
  position?: string | null;
  engine?: string | null;
  island?: string | null;
}

export interface CatalogEngine {
  eid: number;
  name: string;
  kind: string;
  address: string;
  status: string;
}

export interface CatalogObject {
  oid: number;
  name: string;
  fields: string;
  engine_id: number;
  island: string;
  is_temp: boolean;
}

/** A non-2xx response; carries the gateway's structured error body. */
export class ApiError extends Error {
  constructor(public status: number, public payload: ErrorPayload) {
    super(payload.error);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let payload: ErrorPayload;
  try {
    payload = (await resp.json()) as ErrorPayload;
  } catch {
    payload = { error: `HTTP ${resp.status}` };
  }
  return new ApiError(resp.status, payload);
}

export class Api {
  constructor(public endpoint: string) {}

  private url(path: string): string {
    return this.endpoint.replace(/\/+$/, "") + path;
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.url(path));
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  status(): Promise<StatusPayload> {
    return this.getJson("/status");
  }

  catalogEngines(): Promise<CatalogEngine[]> {
    return this.getJson("/catalog/engines");
  }

  catalogObjects(): Promise<CatalogObject[]> {
    return this.getJson("/catalog/objects");
  }

  async query(text: string): Promise<QueryResult> {
    const resp = await fetch(this.url("/bigdawg/query"), {
      method: "POST",
      headers: { "Content-Type": "text/plain", Accept: "application/json" },
      body: text,
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as QueryResult;
  }

  async explain(text: string): Promise<ExplainPayload> {
    const resp = await fetch(this.url("/bigdawg/explain"), {
      method: "POST",
      headers: { "Content-Type": "text/plain" },
      body: text,
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as ExplainPayload;
  }

  async engine(name: string, action: "start" | "stop"): Promise<{ name: string; status: string; changed: boolean }> {
    const resp = await fetch(this.url(`/admin/engine/${encodeURIComponent(name)}/${action}`), {
      method: "POST",
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as { name: string; status: string; changed: boolean };
  }
}
