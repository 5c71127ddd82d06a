import { ServiceClient, ValidationError } from "./api.js";
import { ScribbleLayer } from "./scribbles.js";
import type { SolveMode, SolverStatus } from "./types.js";

export interface LogEntry {
  at: number;
  event: string;
}

/**
 * Drives one editing session: serializes the scribbles, submits them,
 * starts a solve and polls it to completion. At most one solve is in
 * flight; the button state follows `canSolve()`.
 */
export class SessionController {
  status: SolverStatus = "idle";
  resultBytes: ArrayBuffer | null = null;
  resultMode: SolveMode | null = null;
  lastJob: string | null = null;
  log: LogEntry[] = [];

  constructor(
    public client: ServiceClient,
    public layer: ScribbleLayer,
    private now: () => number = Date.now,
  ) {}

  private record(event: string): void {
    this.log.push({ at: this.now(), event });
  }

  canSolve(): boolean {
    return this.status !== "running" && this.layer.pairingComplete();
  }

  async submitAndSolve(
    sid: string,
    mode: SolveMode,
    opts: { overrides?: Record<string, unknown>; pollMs?: number } = {},
  ): Promise<ArrayBuffer> {
    if (this.status === "running") throw new Error("a solve is already running");
    if (!this.layer.pairingComplete()) throw new Error("every pair needs both spots");

    this.status = "running";
    this.record(`submit:${mode}`);
    this.layer.clearProblems();
    const { entries, byEntry } = this.layer.toPayload();
    try {
      await this.client.putCorrespondences(sid, entries);
    } catch (err) {
      this.status = "error";
      if (err instanceof ValidationError) {
        this.layer.applyProblems(err.problems, byEntry);
        this.record(`rejected:${mode}`);
      }
      throw err;
    }

    try {
      const job = await this.client.startSolve(sid, mode, opts.overrides);
      this.lastJob = job;
      this.record(`started:${mode}`);
      const bytes = await this.client.waitForResult(sid, job, { intervalMs: opts.pollMs });
      // Whatever finished last owns the result panel: a full solve after a
      // preview replaces it.
      this.resultBytes = bytes;
      this.resultMode = mode;
      this.status = "done";
      this.record(`result:${mode}`);
      return bytes;
    } catch (err) {
      this.status = "error";
      this.record(`failed:${mode}`);
      throw err;
    }
  }
}
