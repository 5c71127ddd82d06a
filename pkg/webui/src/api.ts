import type { Problem, ScribblePayload, SessionStatus, SolveMode } from "./types.js";

export const POLL_INTERVAL_MS = 250;

export class ApiError extends Error {
  constructor(
    public status: number,
    public label: string,
    public detail: unknown = null,
  ) {
    super(`${status} ${label}`);
  }
}

export class ValidationError extends ApiError {
  constructor(public problems: Problem[]) {
    super(422, "invalid scribbles", problems);
  }
}

function defaultSleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function errorOf(response: Response): Promise<ApiError> {
  let label = response.statusText;
  let detail: unknown = null;
  try {
    const body = await response.json();
    label = body.error ?? label;
    detail = body.detail ?? null;
  } catch {
    // non-JSON error body; keep the status text
  }
  if (response.status === 422 && Array.isArray(detail)) {
    return new ValidationError(detail as Problem[]);
  }
  return new ApiError(response.status, label, detail);
}

/** Thin typed wrapper over the session API; all pixel math stays server-side. */
export class ServiceClient {
  private fetchFn: typeof fetch;

  constructor(
    private base = "",
    fetchFn?: typeof fetch,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) throw await errorOf(response);
    return response;
  }

  async createSession(png: BodyInit): Promise<string> {
    const r = await this.request("/api/session", { method: "POST", body: png });
    return (await r.json()).id;
  }

  async addTarget(sid: string, png: BodyInit): Promise<string> {
    const r = await this.request(`/api/session/${sid}/target`, { method: "POST", body: png });
    return (await r.json()).target_id;
  }

  async putCorrespondences(sid: string, entries: ScribblePayload[]): Promise<void> {
    await this.request(`/api/session/${sid}/correspondences`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(entries),
    });
  }

  async startSolve(sid: string, mode: SolveMode, overrides?: Record<string, unknown>): Promise<string> {
    const r = await this.request(`/api/session/${sid}/solve?mode=${mode}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: overrides ? JSON.stringify(overrides) : null,
    });
    return (await r.json()).job;
  }

  async getStatus(sid: string): Promise<SessionStatus> {
    const r = await this.request(`/api/session/${sid}/status`);
    return r.json();
  }

  /** One poll of a job: PNG bytes when done, null while still running. */
  async fetchResult(sid: string, job: string): Promise<ArrayBuffer | null> {
    const response = await this.fetchFn(this.base + `/api/session/${sid}/result/${job}`);
    if (response.status === 200) return response.arrayBuffer();
    const err = await errorOf(response);
    if (err.status === 409) return null;
    throw err;
  }

  async waitForResult(
    sid: string,
    job: string,
    opts: { intervalMs?: number; timeoutMs?: number; sleep?: (ms: number) => Promise<void> } = {},
  ): Promise<ArrayBuffer> {
    const interval = opts.intervalMs ?? POLL_INTERVAL_MS;
    const timeout = opts.timeoutMs ?? 120_000;
    const sleep = opts.sleep ?? defaultSleep;
    const deadline = Date.now() + timeout;
    for (;;) {
      const bytes = await this.fetchResult(sid, job);
      if (bytes !== null) return bytes;
      if (Date.now() >= deadline) throw new ApiError(408, "solve timed out");
      await sleep(interval);
    }
  }
}
