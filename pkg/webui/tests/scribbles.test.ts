import { describe, expect, it } from "vitest";

import { KEEP_TINT, MAX_PAIRS, PAIR_TINTS, ScribbleLayer, type Tool } from "../src/scribbles.js";
import { mulberry32, wobblyLoop } from "./helpers.js";

const SRC_PAIR: Tool = { kind: "pair", pairId: 0, on: "source", targetId: null };
const TGT_PAIR: Tool = { kind: "pair", pairId: 0, on: "target", targetId: "t1" };
const KEEP: Tool = { kind: "keep", pairId: null, on: "source", targetId: null };

function loop(seed: number, cx = 40, cy = 40, r = 20): ReturnType<typeof wobblyLoop> {
  return wobblyLoop(mulberry32(seed), cx, cy, r, 120);
}

describe("addStroke", () => {
  it("simplifies the trail and keeps only sampled points", () => {
    const trail = loop(1);
    const layer = new ScribbleLayer();
    const stroke = layer.addStroke(trail, SRC_PAIR);
    expect(stroke).not.toBeNull();
    expect(stroke!.path.length).toBeLessThan(trail.length);
    expect(stroke!.path.length).toBeGreaterThanOrEqual(3);
    for (const p of stroke!.path) {
      expect(trail).toContainEqual(p);
    }
    expect(stroke!.color).toBe(PAIR_TINTS[0]);
  });

  it("discards clicks and tiny drags", () => {
    const layer = new ScribbleLayer();
    expect(layer.addStroke([{ x: 5, y: 5 }], SRC_PAIR)).toBeNull();
    const tinyDrag = [
      { x: 5, y: 5 },
      { x: 5.4, y: 5.2 },
      { x: 6, y: 5.1 },
    ];
    expect(layer.addStroke(tinyDrag, SRC_PAIR)).toBeNull();
    expect(layer.strokes).toHaveLength(0);
  });

  it("replaces the previous spot of the same pair and side", () => {
    const layer = new ScribbleLayer();
    layer.addStroke(loop(2), SRC_PAIR);
    layer.addStroke(loop(3, 60, 60), SRC_PAIR);
    layer.addStroke(loop(4), TGT_PAIR);
    expect(layer.strokes).toHaveLength(2);
    const src = layer.strokes.find((s) => s.on === "source")!;
    expect(src.path[0].x).toBeGreaterThan(30); // the 60-centered redraw won
  });

  it("keep strokes accumulate and use the keep tint", () => {
    const layer = new ScribbleLayer();
    layer.addStroke(loop(5, 20, 20, 8), KEEP);
    layer.addStroke(loop(6, 70, 70, 8), KEEP);
    expect(layer.strokes).toHaveLength(2);
    expect(layer.strokes.every((s) => s.color === KEEP_TINT && s.pairId === null)).toBe(true);
  });

  it("enforces the pair budget and target-id requirement", () => {
    const layer = new ScribbleLayer();
    expect(() => layer.addStroke(loop(7), { ...SRC_PAIR, pairId: MAX_PAIRS })).toThrow(RangeError);
    expect(() => layer.addStroke(loop(8), { ...TGT_PAIR, targetId: null })).toThrow("target image");
  });
});

describe("pairingComplete", () => {
  it("requires both spots of every pair and at least one pair", () => {
    const layer = new ScribbleLayer();
    expect(layer.pairingComplete()).toBe(false);

    layer.addStroke(loop(10, 20, 20, 10), KEEP);
    expect(layer.pairingComplete()).toBe(false); // keep-only cannot solve

    layer.addStroke(loop(11), SRC_PAIR);
    expect(layer.pairingComplete()).toBe(false); // dangling source spot

    layer.addStroke(loop(12), TGT_PAIR);
    expect(layer.pairingComplete()).toBe(true);

    layer.addStroke(loop(13, 60, 30), { kind: "pair", pairId: 1, on: "target", targetId: "t1" });
    expect(layer.pairingComplete()).toBe(false); // pair 2 has no source spot

    layer.addStroke(loop(14, 60, 30), { kind: "pair", pairId: 1, on: "source", targetId: null });
    expect(layer.pairingComplete()).toBe(true);
  });
});

describe("toPayload", () => {
  it("serializes pairs in id order, then keeps, with stroke back-references", () => {
    const layer = new ScribbleLayer();
    layer.addStroke(loop(20, 30, 60), { kind: "pair", pairId: 1, on: "source", targetId: null });
    layer.addStroke(loop(21, 30, 60), { kind: "pair", pairId: 1, on: "target", targetId: "t2" });
    layer.addStroke(loop(22), SRC_PAIR);
    layer.addStroke(loop(23), TGT_PAIR);
    const keepStroke = layer.addStroke(loop(24, 75, 75, 6), KEEP)!;

    const { entries, byEntry } = layer.toPayload();
    expect(entries.map((e) => e.kind)).toEqual(["pair", "pair", "keep"]);
    expect(entries[0]).toMatchObject({ target_id: "t1" });
    expect(entries[1]).toMatchObject({ target_id: "t2" });
    const first = entries[0] as { source_path: number[][]; target_path: number[][] };
    expect(first.source_path[0]).toHaveLength(2);
    expect(first.target_path.length).toBeGreaterThanOrEqual(3);
    expect(byEntry[0].map((s) => s.on)).toEqual(["source", "target"]);
    expect(byEntry[2]).toEqual([keepStroke]);
  });

  it("refuses to serialize an incomplete pair", () => {
    const layer = new ScribbleLayer();
    layer.addStroke(loop(25), SRC_PAIR);
    expect(() => layer.toPayload()).toThrow("incomplete");
  });
});

describe("problem routing", () => {
  it("attaches diagnostics to every stroke behind the offending entry", () => {
    const layer = new ScribbleLayer();
    layer.addStroke(loop(30), SRC_PAIR);
    layer.addStroke(loop(31), TGT_PAIR);
    layer.addStroke(loop(32, 70, 70, 8), KEEP);
    const { byEntry } = layer.toPayload();

    layer.applyProblems(
      [
        { path: 0, error: "scribbles overlap" },
        { path: 1, error: "empty region" },
        { path: 9, error: "dangling index is ignored" },
      ],
      byEntry,
    );
    const pairStrokes = layer.strokes.filter((s) => s.kind === "pair");
    expect(pairStrokes.every((s) => s.problem === "scribbles overlap")).toBe(true);
    expect(layer.strokes.find((s) => s.kind === "keep")!.problem).toBe("empty region");

    layer.clearProblems();
    expect(layer.strokes.every((s) => s.problem === null)).toBe(true);
  });
});
