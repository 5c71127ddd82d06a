import type { Point } from "./types.js";

/**
 * Fill the implicitly closed polygon on a width x height grid.
 *
 * Membership is decided at pixel centers (x + 0.5, y + 0.5) under the
 * even-odd rule with vertices clamped into the canvas — the same rule the
 * service applies, so client overlays and server masks agree pixel for
 * pixel. Returns a row-major 0/1 buffer.
 */
export function fillClosedPath(path: Point[], width: number, height: number): Uint8Array {
  if (path.length < 3) throw new Error("empty region");
  const n = path.length;
  const px = new Float64Array(n);
  const py = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    px[i] = Math.min(Math.max(path[i].x, 0), width);
    py[i] = Math.min(Math.max(path[i].y, 0), height);
  }

  const mask = new Uint8Array(width * height);
  let any = false;
  const crossings: number[] = [];
  for (let y = 0; y < height; y++) {
    const cy = y + 0.5;
    crossings.length = 0;
    for (let a = 0; a < n; a++) {
      const b = (a + 1) % n;
      const ya = py[a];
      const yb = py[b];
      if (ya === yb) continue; // horizontal edges never cross a horizontal ray
      if (ya > cy === yb > cy) continue;
      crossings.push(px[a] + ((cy - ya) * (px[b] - px[a])) / (yb - ya));
    }
    if (crossings.length === 0) continue;
    crossings.sort((u, v) => u - v);
    // A closed loop crosses each row an even number of times, so parity of
    // crossings left of the center equals parity of crossings right of it.
    let idx = 0;
    let parity = 0;
    const row = y * width;
    for (let x = 0; x < width; x++) {
      const cx = x + 0.5;
      while (idx < crossings.length && crossings[idx] <= cx) {
        idx++;
        parity ^= 1;
      }
      if (parity === 1) {
        mask[row + x] = 1;
        any = true;
      }
    }
  }
  if (!any) throw new Error("empty region");
  return mask;
}

/** Decode the service's run-length masks: alternating runs, zeros first. */
export function decodeRle(runs: number[], width: number, height: number): Uint8Array {
  const mask = new Uint8Array(width * height);
  let pos = 0;
  let value = 0;
  for (const run of runs) {
    if (value === 1) mask.fill(1, pos, pos + run);
    pos += run;
    value ^= 1;
  }
  if (pos !== width * height) throw new Error(`run lengths cover ${pos} of ${width * height} pixels`);
  return mask;
}

/** Fraction of pixels on which the two masks agree. */
export function maskAgreement(a: Uint8Array, b: Uint8Array): number {
  if (a.length !== b.length) throw new Error("mask sizes differ");
  let same = 0;
  for (let i = 0; i < a.length; i++) {
    if (a[i] === b[i]) same++;
  }
  return same / a.length;
}
