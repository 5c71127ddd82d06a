import type { Point } from "./types.js";

/** Pan/zoom state mapping CSS-pixel screen coordinates to image coordinates. */
export class ViewTransform {
  constructor(
    public zoom = 1,
    public panX = 0,
    public panY = 0,
  ) {}

  toImage(sx: number, sy: number): Point {
    return { x: (sx - this.panX) / this.zoom, y: (sy - this.panY) / this.zoom };
  }

  toScreen(p: Point): Point {
    return { x: p.x * this.zoom + this.panX, y: p.y * this.zoom + this.panY };
  }

  /** Rescale while keeping the screen point (sx, sy) over the same image point. */
  zoomAt(sx: number, sy: number, factor: number): void {
    const anchor = this.toImage(sx, sy);
    this.zoom *= factor;
    this.panX = sx - anchor.x * this.zoom;
    this.panY = sy - anchor.y * this.zoom;
  }
}

function perpendicularDistance(p: Point, a: Point, b: Point): number {
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const len2 = dx * dx + dy * dy;
  if (len2 === 0) return Math.hypot(p.x - a.x, p.y - a.y);
  // Distance to the infinite line; RDP uses it as the keep/drop criterion.
  return Math.abs(dy * p.x - dx * p.y + b.x * a.y - b.y * a.x) / Math.sqrt(len2);
}

/**
 * Ramer-Douglas-Peucker simplification. Endpoints survive; every dropped
 * point lies within `tolerance` of the simplified polyline.
 */
export function simplifyPath(path: Point[], tolerance: number): Point[] {
  if (path.length <= 2) return path.slice();
  let worst = 0;
  let worstIdx = 0;
  const first = path[0];
  const last = path[path.length - 1];
  for (let i = 1; i < path.length - 1; i++) {
    const d = perpendicularDistance(path[i], first, last);
    if (d > worst) {
      worst = d;
      worstIdx = i;
    }
  }
  if (worst <= tolerance) return [first, last];
  const head = simplifyPath(path.slice(0, worstIdx + 1), tolerance);
  const tail = simplifyPath(path.slice(worstIdx), tolerance);
  return head.slice(0, -1).concat(tail);
}

/** Absolute shoelace area of the implicitly closed polygon. */
export function pathArea(path: Point[]): number {
  let twice = 0;
  for (let i = 0; i < path.length; i++) {
    const a = path[i];
    const b = path[(i + 1) % path.length];
    twice += a.x * b.y - b.x * a.y;
  }
  return Math.abs(twice) / 2;
}
