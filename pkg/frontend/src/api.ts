/** Typed HTTP client for the kgtable REST service.
 *
 * The UI never computes enrichment outcomes itself; every method returns
 * whatever the server said, and table methods return full views.
 */

import type {
  ErrorEnvelope,
  FilterResult,
  JobDoc,
  ProposedProperty,
  ServiceDoc,
  TableSummary,
  TableView,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly details: Record<string, unknown>;

  constructor(status: number, envelope: ErrorEnvelope) {
    super(envelope.message);
    this.status = status;
    this.code = envelope.code;
    this.details = envelope.details ?? {};
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;
export type SleepLike = (ms: number) => Promise<void>;

export interface PollOptions {
  initialDelayMs?: number;
  backoffFactor?: number;
  maxDelayMs?: number;
  timeoutMs?: number;
}

const realSleep: SleepLike = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private readonly sleep: SleepLike = realSleep,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let envelope: ErrorEnvelope;
      try {
        envelope = (await response.json()) as ErrorEnvelope;
      } catch {
        envelope = { code: "HttpError", message: `${response.status} on ${path}`, details: {} };
      }
      throw new ApiError(response.status, envelope);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  listTables(name = ""): Promise<TableSummary[]> {
    const query = name ? `?name=${encodeURIComponent(name)}` : "";
    return this.request("GET", `/tables${query}`);
  }

  importTable(name: string, format: string, data: string): Promise<TableView> {
    return this.request("POST", "/tables", { name, format, data });
  }

  getTable(tableId: string): Promise<TableView> {
    return this.request("GET", `/tables/${encodeURIComponent(tableId)}`);
  }

  deleteTable(tableId: string): Promise<void> {
    return this.request("DELETE", `/tables/${encodeURIComponent(tableId)}`);
  }

  exportUrl(tableId: string, format: string): string {
    return `${this.baseUrl}/tables/${encodeURIComponent(tableId)}/export?format=${encodeURIComponent(format)}`;
  }

  applyEdit(tableId: string, edit: Record<string, unknown>): Promise<TableView> {
    return this.request("POST", `/tables/${encodeURIComponent(tableId)}/edits`, edit);
  }

  undo(tableId: string): Promise<TableView> {
    return this.request("POST", `/tables/${encodeURIComponent(tableId)}/edits/undo`);
  }

  redo(tableId: string): Promise<TableView> {
    return this.request("POST", `/tables/${encodeURIComponent(tableId)}/edits/redo`);
  }

  selectCandidate(tableId: string, cellId: string, entityId: string): Promise<TableView> {
    return this.request(
      "POST",
      `/tables/${encodeURIComponent(tableId)}/cells/${encodeURIComponent(cellId)}/select`,
      { entityId },
    );
  }

  addCandidate(tableId: string, cellId: string, candidate: Record<string, unknown>): Promise<TableView> {
    return this.request(
      "POST",
      `/tables/${encodeURIComponent(tableId)}/cells/${encodeURIComponent(cellId)}/candidates`,
      candidate,
    );
  }

  annotateColumn(tableId: string, columnId: string, body: Record<string, unknown>): Promise<TableView> {
    return this.request(
      "POST",
      `/tables/${encodeURIComponent(tableId)}/columns/${encodeURIComponent(columnId)}/annotate`,
      body,
    );
  }

  refineColumn(
    tableId: string,
    columnId: string,
    strategy: string,
    args: Record<string, unknown>,
  ): Promise<TableView> {
    return this.request(
      "POST",
      `/tables/${encodeURIComponent(tableId)}/columns/${encodeURIComponent(columnId)}/refine`,
      { strategy, args },
    );
  }

  filterRows(tableId: string, kind: string, needle: string, scope?: string[]): Promise<FilterResult> {
    const params = new URLSearchParams({ kind, needle });
    if (scope && scope.length) {
      params.set("scope", scope.join(","));
    }
    return this.request("GET", `/tables/${encodeURIComponent(tableId)}/filter?${params.toString()}`);
  }

  searchCells(tableId: string, q: string, kind = "LABEL"): Promise<{ cells: string[] }> {
    const params = new URLSearchParams({ q, kind });
    return this.request("GET", `/tables/${encodeURIComponent(tableId)}/search?${params.toString()}`);
  }

  listServices(kind?: string): Promise<ServiceDoc[]> {
    const query = kind ? `?kind=${encodeURIComponent(kind)}` : "";
    return this.request("GET", `/services${query}`);
  }

  proposeProperties(tableId: string, columnId: string, serviceId: string): Promise<{ properties: ProposedProperty[] }> {
    const params = new URLSearchParams({ serviceId });
    return this.request(
      "GET",
      `/tables/${encodeURIComponent(tableId)}/columns/${encodeURIComponent(columnId)}/propose?${params.toString()}`,
    );
  }

  startReconcile(
    tableId: string,
    columnId: string,
    serviceId: string,
    params: Record<string, unknown> = {},
  ): Promise<{ jobId: string }> {
    return this.request(
      "POST",
      `/tables/${encodeURIComponent(tableId)}/columns/${encodeURIComponent(columnId)}/reconcile`,
      { serviceId, params },
    );
  }

  startExtend(
    tableId: string,
    columnId: string,
    serviceId: string,
    propertyIds: string[],
    params: Record<string, unknown> = {},
  ): Promise<{ jobId: string }> {
    return this.request("POST", `/tables/${encodeURIComponent(tableId)}/extend`, {
      columnId,
      serviceId,
      propertyIds,
      params,
    });
  }

  getJob(jobId: string): Promise<JobDoc> {
    return this.request("GET", `/jobs/${encodeURIComponent(jobId)}`);
  }

  /** Poll a job until it settles: 500 ms first, exponential backoff after. */
  async pollJob(jobId: string, options: PollOptions = {}): Promise<JobDoc> {
    const initial = options.initialDelayMs ?? 500;
    const factor = options.backoffFactor ?? 1.5;
    const maxDelay = options.maxDelayMs ?? 5000;
    const timeout = options.timeoutMs ?? 120_000;
    let delay = initial;
    let waited = 0;
    for (;;) {
      const job = await this.getJob(jobId);
      if (job.status !== "PENDING") {
        return job;
      }
      if (waited >= timeout) {
        throw new ApiError(504, {
          code: "JobTimeout",
          message: `job ${jobId} still pending after ${timeout} ms`,
          details: { jobId },
        });
      }
      await this.sleep(delay);
      waited += delay;
      delay = Math.min(delay * factor, maxDelay);
    }
  }
}
