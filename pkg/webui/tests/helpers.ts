import { crc32, deflateSync } from "node:zlib";

import type { Point } from "../src/types.js";

/** Deterministic 32-bit generator for seeded test loops. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function chunk(type: string, data: Buffer): Buffer {
  const head = Buffer.alloc(4);
  head.writeUInt32BE(data.length);
  const typed = Buffer.concat([Buffer.from(type, "ascii"), data]);
  const tail = Buffer.alloc(4);
  tail.writeUInt32BE(crc32(typed));
  return Buffer.concat([head, typed, tail]);
}

/** Minimal truecolor PNG encoder; enough to feed the service in tests. */
export function pngEncode(width: number, height: number, rgb: Uint8Array): Buffer {
  if (rgb.length !== width * height * 3) throw new Error("pixel buffer size mismatch");
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // truecolor
  const raw = Buffer.alloc(height * (1 + width * 3));
  for (let y = 0; y < height; y++) {
    const o = y * (1 + width * 3);
    raw[o] = 0; // no filter
    raw.set(rgb.subarray(y * width * 3, (y + 1) * width * 3), o + 1);
  }
  return Buffer.concat([
    Buffer.from([137, 80, 78, 71, 13, 10, 26, 10]),
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(raw)),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

/** Four-color quadrant test image as PNG bytes. */
export function quadrantPng(size: number): Buffer {
  const colors = [
    [200, 40, 40],
    [40, 180, 60],
    [50, 70, 200],
    [128, 128, 128],
  ];
  const rgb = new Uint8Array(size * size * 3);
  const half = size / 2;
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const c = colors[(y < half ? 0 : 2) + (x < half ? 0 : 1)];
      rgb.set(c, (y * size + x) * 3);
    }
  }
  return pngEncode(size, size, rgb);
}

/** Scalar even-odd test; reference oracle for the raster fill. */
export function pointInPolygon(x: number, y: number, path: Point[]): boolean {
  let inside = false;
  const n = path.length;
  for (let a = 0; a < n; a++) {
    const pa = path[a];
    const pb = path[(a + 1) % n];
    if (pa.y === pb.y) continue;
    if (pa.y > y !== pb.y > y && x < pa.x + ((y - pa.y) * (pb.x - pa.x)) / (pb.y - pa.y)) {
      inside = !inside;
    }
  }
  return inside;
}

/** Star-shaped polygon with random radii, kept fully inside the canvas. */
export function randomPolygon(rng: () => number, width: number, height: number, verts: number): Point[] {
  const cx = width / 2 + (rng() * 4 - 2);
  const cy = height / 2 + (rng() * 4 - 2);
  const maxR = Math.min(width, height) / 2 - 4;
  const path: Point[] = [];
  for (let i = 0; i < verts; i++) {
    const angle = (2 * Math.PI * i) / verts + rng() * 0.2;
    const r = 3 + rng() * (maxR - 3);
    path.push({ x: cx + r * Math.cos(angle), y: cy + r * Math.sin(angle) });
  }
  return path;
}

/** Wobbly circular pointer trail, the shape a freehand loop capture yields. */
export function wobblyLoop(
  rng: () => number,
  cx: number,
  cy: number,
  radius: number,
  samples: number,
): Point[] {
  const trail: Point[] = [];
  for (let i = 0; i < samples; i++) {
    const angle = (2 * Math.PI * i) / samples;
    const r = radius + (rng() - 0.5) * 2;
    trail.push({ x: cx + r * Math.cos(angle), y: cy + r * Math.sin(angle) });
  }
  return trail;
}

/** Row-major mask to the service's alternating run-length form. */
export function encodeRle(mask: Uint8Array): number[] {
  const runs: number[] = [];
  let value = 0;
  let run = 0;
  for (const bit of mask) {
    if (bit === value) {
      run++;
    } else {
      runs.push(run);
      value ^= 1;
      run = 1;
    }
  }
  runs.push(run);
  return runs;
}
