import { simplifyPath } from "./geometry.js";
import type { Point, Problem, ScribblePayload, Side, Stroke, StrokeKind } from "./types.js";

/** Pair identities are color-coded and capped for legibility. */
export const MAX_PAIRS = 8;
export const PAIR_TINTS = [
  "#4c8dff",
  "#ff5c5c",
  "#3ecf8e",
  "#f5a623",
  "#b45cff",
  "#00bcd4",
  "#ff7ab8",
  "#c0ca33",
];
export const KEEP_TINT = "#9aa0a6";

export const SIMPLIFY_TOLERANCE_PX = 1;
export const MIN_PATH_POINTS = 3;

export interface Tool {
  kind: StrokeKind;
  pairId: number | null;
  on: Side;
  targetId: string | null;
}

/**
 * The set of drawn scribbles plus the pairing bookkeeping that gates the
 * solve button: every pair needs both a source and a target spot.
 */
export class ScribbleLayer {
  strokes: Stroke[] = [];

  /**
   * Simplify, auto-close and store a captured pointer trail. Returns null
   * (and stores nothing) when fewer than 3 points survive simplification;
   * the caller is expected to surface that as a toast.
   */
  addStroke(trail: Point[], tool: Tool): Stroke | null {
    if (tool.kind === "pair") {
      if (tool.pairId === null || tool.pairId < 0 || tool.pairId >= MAX_PAIRS) {
        throw new RangeError(`pair id must be 0..${MAX_PAIRS - 1}`);
      }
      if (tool.on === "target" && !tool.targetId) {
        throw new Error("target-side strokes need a target image");
      }
    }
    const path = simplifyPath(trail, SIMPLIFY_TOLERANCE_PX);
    if (path.length < MIN_PATH_POINTS) return null;

    const stroke: Stroke = {
      kind: tool.kind,
      pairId: tool.kind === "pair" ? tool.pairId : null,
      on: tool.kind === "pair" ? tool.on : "source",
      targetId: tool.on === "target" ? tool.targetId : null,
      path,
      color: tool.kind === "keep" ? KEEP_TINT : PAIR_TINTS[tool.pairId as number],
      problem: null,
    };
    if (tool.kind === "pair") {
      // One spot per side per pair: redrawing replaces the previous spot.
      this.strokes = this.strokes.filter(
        (s) => !(s.kind === "pair" && s.pairId === stroke.pairId && s.on === stroke.on),
      );
    }
    this.strokes.push(stroke);
    return stroke;
  }

  private pairSide(pairId: number, on: Side): Stroke | undefined {
    return this.strokes.find((s) => s.kind === "pair" && s.pairId === pairId && s.on === on);
  }

  pairIds(): number[] {
    const ids = new Set<number>();
    for (const s of this.strokes) {
      if (s.kind === "pair" && s.pairId !== null) ids.add(s.pairId);
    }
    return [...ids].sort((a, b) => a - b);
  }

  /** True when at least one pair exists and no pair is missing a side. */
  pairingComplete(): boolean {
    const ids = this.pairIds();
    if (ids.length === 0) return false;
    return ids.every((id) => this.pairSide(id, "source") && this.pairSide(id, "target"));
  }

  /**
   * Serialize to the service's correspondence list: pairs in ascending
   * pair-id order, then keep strokes in draw order. Also returns, per
   * payload entry, the strokes it came from so 422 diagnostics can be
   * routed back onto the canvas.
   */
  toPayload(): { entries: ScribblePayload[]; byEntry: Stroke[][] } {
    const entries: ScribblePayload[] = [];
    const byEntry: Stroke[][] = [];
    for (const id of this.pairIds()) {
      const src = this.pairSide(id, "source");
      const tgt = this.pairSide(id, "target");
      if (!src || !tgt || !tgt.targetId) throw new Error(`pair ${id + 1} is incomplete`);
      entries.push({
        kind: "pair",
        target_id: tgt.targetId,
        source_path: src.path.map((p) => [p.x, p.y]),
        target_path: tgt.path.map((p) => [p.x, p.y]),
      });
      byEntry.push([src, tgt]);
    }
    for (const s of this.strokes) {
      if (s.kind !== "keep") continue;
      entries.push({ kind: "keep", source_path: s.path.map((p) => [p.x, p.y]) });
      byEntry.push([s]);
    }
    return { entries, byEntry };
  }

  clearProblems(): void {
    for (const s of this.strokes) s.problem = null;
  }

  /** Attach 422 diagnostics to the strokes behind the offending entries. */
  applyProblems(problems: Problem[], byEntry: Stroke[][]): void {
    for (const problem of problems) {
      const strokes = byEntry[problem.path];
      if (!strokes) continue;
      for (const s of strokes) s.problem = problem.error;
    }
  }
}
