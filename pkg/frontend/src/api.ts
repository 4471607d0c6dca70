/** Typed client for the local planning service. */

import type {
  InstanceSummary,
  JobRef,
  JobStatus,
  NetworkView,
  RunDoc,
  StageRequest,
  ValidationResult,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ApiError";
  }
}

/** A commit is already in flight; retry once it finishes. */
export function isConflict(error: unknown): boolean {
  return error instanceof ApiError && error.status === 409;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const detail =
        body && typeof body === "object" && "detail" in body
          ? (body as { detail: unknown }).detail
          : body;
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  instance(): Promise<InstanceSummary> {
    return this.request<InstanceSummary>("/instance");
  }

  network(): Promise<NetworkView> {
    return this.request<NetworkView>("/network");
  }

  validatePlan(request: StageRequest): Promise<ValidationResult> {
    return this.post<ValidationResult>("/plan/validate", request);
  }

  /** Start a stage on the committed timeline (single writer). */
  runStage(request: StageRequest): Promise<JobRef> {
    return this.post<JobRef>("/run-stage", request);
  }

  advanceStage(request: StageRequest): Promise<JobRef> {
    return this.post<JobRef>("/advance-stage", request);
  }

  /** Start an isolated exploration run; never touches the committed state. */
  whatIf(request: StageRequest): Promise<JobRef> {
    return this.post<JobRef>("/what-if", request);
  }

  jobStatus(jobId: string): Promise<JobStatus> {
    return this.request<JobStatus>(`/jobs/${jobId}`);
  }

  jobResult(jobId: string): Promise<RunDoc> {
    return this.request<RunDoc>(`/jobs/${jobId}/result`);
  }

  /** Raw result bytes, for byte-exact comparisons of committed reports. */
  async jobResultText(jobId: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/jobs/${jobId}/result`);
    const text = await response.text();
    if (!response.ok) {
      throw new ApiError(response.status, text);
    }
    return text;
  }
}
