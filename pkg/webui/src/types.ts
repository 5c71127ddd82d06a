export interface Point {
  x: number;
  y: number;
}

export type StrokeKind = "pair" | "keep";
export type Side = "source" | "target";
export type SolveMode = "full" | "preview";
export type SolverStatus = "idle" | "running" | "done" | "error";

export interface Stroke {
  kind: StrokeKind;
  /** 0-based pair identity; null for keep strokes. */
  pairId: number | null;
  on: Side;
  /** Reference image a pair's target path was drawn on; null on the source side. */
  targetId: string | null;
  /** Image coordinates, implicitly closed. */
  path: Point[];
  /** Display tint; shared by both strokes of a pair. */
  color: string;
  /** Inline diagnostic from the last rejected submit, if any. */
  problem: string | null;
}

// Wire format of PUT /correspondences, one entry per scribble.
export interface PairPayload {
  kind: "pair";
  target_id: string;
  source_path: number[][];
  target_path: number[][];
}

export interface KeepPayload {
  kind: "keep";
  source_path: number[][];
}

export type ScribblePayload = PairPayload | KeepPayload;

/** One 422 diagnostic; `path` indexes the submitted payload list. */
export interface Problem {
  path: number;
  error: string;
}

export interface SolveReport {
  stages_ms: Record<string, number>;
  total_ms: number;
  iterations: number[];
  converged: boolean[];
  landmarks: number;
  [extra: string]: unknown;
}

export interface MaskPair {
  target_id: string;
  source_rle: number[];
  target_width: number;
  target_height: number;
  target_rle: number[];
}

export interface MaskSummary {
  width: number;
  height: number;
  pairs: MaskPair[];
  keeps: number[][];
}

export interface SessionStatus {
  state: string;
  jobs: Record<string, string>;
  last_report: SolveReport | null;
  masks: MaskSummary | null;
  [extra: string]: unknown;
}
