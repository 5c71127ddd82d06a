import { ViewTransform } from "./geometry.js";
import { fillClosedPath } from "./raster.js";
import { ScribbleLayer, type Tool } from "./scribbles.js";
import type { Point, Stroke } from "./types.js";

const OVERLAY_ALPHA = 96; // of 255
const PROBLEM_TINT = "#ff1744";

function hexToRgb(hex: string): [number, number, number] {
  const v = parseInt(hex.slice(1), 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff];
}

/**
 * Freehand capture surface stacked over one image. Pointer trails are
 * recorded in image coordinates through the view transform, handed to the
 * scribble layer on release, and rendered back with the same fill the
 * server uses for its masks.
 */
export class ScribbleCanvas {
  readonly view = new ViewTransform();
  private trail: Point[] = [];
  private drawing = false;

  constructor(
    private canvas: HTMLCanvasElement,
    private layer: ScribbleLayer,
    private imageWidth: number,
    private imageHeight: number,
    private pickTool: () => Tool | null,
    private onDiscard: (reason: string) => void,
    private onChange: () => void,
  ) {
    canvas.addEventListener("pointerdown", (e) => this.start(e));
    canvas.addEventListener("pointermove", (e) => this.extend(e));
    canvas.addEventListener("pointerup", (e) => this.finish(e));
    canvas.addEventListener("pointercancel", () => {
      this.drawing = false;
      this.trail = [];
    });
  }

  private eventPoint(e: PointerEvent): Point {
    const rect = this.canvas.getBoundingClientRect();
    return this.view.toImage(e.clientX - rect.left, e.clientY - rect.top);
  }

  private start(e: PointerEvent): void {
    if (!this.pickTool()) return;
    this.drawing = true;
    this.trail = [this.eventPoint(e)];
    this.canvas.setPointerCapture(e.pointerId);
  }

  private extend(e: PointerEvent): void {
    if (!this.drawing) return;
    this.trail.push(this.eventPoint(e));
  }

  private finish(e: PointerEvent): void {
    if (!this.drawing) return;
    this.drawing = false;
    this.canvas.releasePointerCapture(e.pointerId);
    const tool = this.pickTool();
    if (!tool) return;
    const stroke = this.layer.addStroke(this.trail, tool);
    this.trail = [];
    if (stroke === null) {
      this.onDiscard("stroke too small, draw a closed shape");
      return;
    }
    this.onChange();
  }

  /** Repaint all strokes belonging to this surface. */
  render(owns: (s: Stroke) => boolean): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const w = this.imageWidth;
    const h = this.imageHeight;
    this.canvas.width = w;
    this.canvas.height = h;
    ctx.clearRect(0, 0, w, h);
    const image = ctx.createImageData(w, h);
    for (const stroke of this.layer.strokes) {
      if (!owns(stroke)) continue;
      let mask: Uint8Array;
      try {
        mask = fillClosedPath(stroke.path, w, h);
      } catch {
        continue; // degenerate after clamping; the server will diagnose it
      }
      const [r, g, b] = hexToRgb(stroke.problem ? PROBLEM_TINT : stroke.color);
      for (let i = 0; i < mask.length; i++) {
        if (mask[i] === 0) continue;
        const o = i * 4;
        image.data[o] = r;
        image.data[o + 1] = g;
        image.data[o + 2] = b;
        image.data[o + 3] = OVERLAY_ALPHA;
      }
    }
    ctx.putImageData(image, 0, 0);
  }
}
