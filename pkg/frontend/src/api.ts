/**
 * Typed client for the governed-memory service.
 *
 * The console talks only to these endpoints; it holds no authoritative
 * state of its own, so any call can be retried after a refresh.
 */

export interface EvidenceRef {
  kind: string;
  value: string;
  note?: string | null;
  summary?: string;
}

export interface QueueEntry {
  candidate_id: string;
  kind: string;
  resource_id: string;
  payload: Record<string, unknown>;
  drafted_by: string;
  evidence: EvidenceRef[];
  enqueued_at: string;
  age_seconds: number;
}

export interface LineageVersion {
  id: string;
  status: string;
  decided_at: string | null;
  supersedes?: string | null;
}

export interface LineageChain {
  resource_id: string;
  versions: LineageVersion[];
}

export interface Provenance {
  drafted_by: string;
  evidence: EvidenceRef[];
  ratified_by?: string;
  regime?: string;
  supersedes?: string;
  decided_at?: string;
  decision_note?: string;
}

export interface MemoryRecord {
  id: string;
  resource_id: string;
  kind: string;
  layer: string;
  status: string;
  payload: Record<string, unknown>;
  provenance: Provenance;
  created_at: string;
}

export interface MetricsSnapshot {
  provenance_fidelity: number;
  selection_traceability: number;
  status_counts: Record<string, number>;
  store_counts: Record<string, number>;
  queue_depth: number;
  queue_max_age_seconds: number;
  regime: string;
}

export type DecisionOutcome = "ratified" | "rejected" | "abstained";

/** Server-reported failure: carries the taxonomy code and HTTP status. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }

  get isConflict(): boolean {
    return this.status === 409;
  }

  get isAuth(): boolean {
    return this.status === 401;
  }
}

/** Transport failure: server unreachable; safe to retry, nothing changed. */
export class NetworkError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

export type FetchLike = (
  input: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
}>;

export interface ApiConfig {
  baseUrl: string;
  operatorToken?: string;
  fetchFn?: FetchLike;
}

export class ConsoleApi {
  private readonly baseUrl: string;
  private readonly token: string | undefined;
  private readonly fetchFn: FetchLike;

  constructor(config: ApiConfig) {
    this.baseUrl = config.baseUrl.replace(/\/+$/, "");
    this.token = config.operatorToken;
    this.fetchFn =
      config.fetchFn ?? (globalThis.fetch?.bind(globalThis) as FetchLike);
    if (!this.fetchFn) {
      throw new Error("no fetch implementation available");
    }
  }

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    const base: Record<string, string> = { ...extra };
    if (this.token) {
      base["Authorization"] = `Bearer ${this.token}`;
    }
    return base;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    agentId?: string,
  ): Promise<T> {
    const headers = this.headers(
      body !== undefined ? { "Content-Type": "application/json" } : {},
    );
    if (agentId) {
      headers["X-Agent-Id"] = agentId;
    }
    let response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers,
        body: body !== undefined ? JSON.stringify(body) : undefined,
      });
    } catch (err) {
      throw new NetworkError(`cannot reach ${this.baseUrl}: ${String(err)}`);
    }
    if (response.status >= 400) {
      let code = "error";
      let message = `HTTP ${response.status}`;
      try {
        const parsed = (await response.json()) as {
          code?: string;
          message?: string;
        };
        code = parsed.code ?? code;
        message = parsed.message ?? message;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  getQueue(): Promise<{ entries: QueueEntry[] }> {
    return this.request("GET", "/review-queue");
  }

  submitDecision(
    candidateId: string,
    outcome: DecisionOutcome,
    note: string,
  ): Promise<MemoryRecord> {
    return this.request("POST", "/decisions", {
      candidate_id: candidateId,
      outcome,
      note,
    });
  }

  supersede(
    resourceId: string,
    newPayload: Record<string, unknown>,
    evidence: EvidenceRef[],
    note: string,
  ): Promise<MemoryRecord> {
    return this.request("POST", "/supersede", {
      resource_id: resourceId,
      new_payload: newPayload,
      evidence,
      note,
    });
  }

  getLineage(resourceId: string): Promise<LineageChain> {
    return this.request("GET", `/lineage/${encodeURIComponent(resourceId)}`);
  }

  getMetrics(): Promise<MetricsSnapshot> {
    return this.request("GET", "/metrics");
  }

  getMemories(params: {
    layer?: string;
    status?: string;
    kind?: string;
    resource_id?: string;
  }): Promise<{ records: MemoryRecord[]; total: number }> {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(params)) {
      if (value !== undefined) {
        query.set(key, value);
      }
    }
    const suffix = query.toString() ? `?${query.toString()}` : "";
    return this.request("GET", `/memories${suffix}`, undefined, "console");
  }
}
