import type { CaseReport, EvalRunState } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (typeof body?.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  throw new ApiError(resp.status, detail);
}

/** Thin client over the engine's HTTP API. Every workflow transition goes
 * through the documented endpoints; the UI never mutates state otherwise. */
export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    await raiseForStatus(resp);
    return (await resp.json()) as T;
  }

  async createCase(image: ArrayBuffer | Uint8Array): Promise<CaseReport> {
    return this.json("/cases", {
      method: "POST",
      headers: { "Content-Type": "application/octet-stream" },
      body: image as BodyInit,
    });
  }

  /** `action` is one of the server-reported legal actions
   * ("analyze" | "xai" | "followup"). */
  async performAction(caseId: string, action: string): Promise<unknown> {
    return this.json(`/cases/${encodeURIComponent(caseId)}/${action}`, {
      method: "POST",
    });
  }

  async getReport(caseId: string): Promise<CaseReport> {
    return this.json(`/cases/${encodeURIComponent(caseId)}/report`);
  }

  imageUrl(caseId: string): string {
    return `${this.baseUrl}/cases/${encodeURIComponent(caseId)}/image`;
  }

  async startEvalRun(corpus: string, reviews?: string): Promise<EvalRunState> {
    return this.json("/eval/runs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(reviews ? { corpus, reviews } : { corpus }),
    });
  }

  async getEvalRun(runId: string): Promise<EvalRunState> {
    return this.json(`/eval/runs/${encodeURIComponent(runId)}`);
  }
}
