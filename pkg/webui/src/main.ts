import { ServiceClient } from "./api.js";
import { ScribbleCanvas } from "./canvas.js";
import { SessionController } from "./controller.js";
import { KEEP_TINT, MAX_PAIRS, PAIR_TINTS, ScribbleLayer, type Tool } from "./scribbles.js";
import { CompareSlider } from "./slider.js";

const TOAST_MS = 4000;

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

class App {
  client = new ServiceClient("");
  layer = new ScribbleLayer();
  controller = new SessionController(this.client, this.layer);

  sessionId: string | null = null;
  targetIds: string[] = [];
  activeTarget: string | null = null;
  tool: Tool | null = null;

  sourceCanvas: ScribbleCanvas | null = null;
  targetCanvas: ScribbleCanvas | null = null;
  slider: CompareSlider | null = null;

  private toastTimer: number | undefined;

  toast(message: string): void {
    const el = byId<HTMLDivElement>("toast");
    el.textContent = message;
    el.classList.add("visible");
    window.clearTimeout(this.toastTimer);
    this.toastTimer = window.setTimeout(() => el.classList.remove("visible"), TOAST_MS);
  }

  setStatusLine(text: string): void {
    byId<HTMLSpanElement>("status").textContent = text;
  }

  refresh(): void {
    this.sourceCanvas?.render((s) => s.on === "source");
    this.targetCanvas?.render((s) => s.on === "target" && s.targetId === this.activeTarget);
    const enabled = this.sessionId !== null && this.controller.canSolve();
    byId<HTMLButtonElement>("solve-full").disabled = !enabled;
    byId<HTMLButtonElement>("solve-preview").disabled = !enabled;
    const problems = this.layer.strokes.filter((s) => s.problem);
    byId<HTMLDivElement>("problems").textContent = problems
      .map((s) => (s.kind === "pair" ? `pair ${Number(s.pairId) + 1}: ${s.problem}` : `keep: ${s.problem}`))
      .join("\n");
  }

  private async loadImage(file: File): Promise<{ url: string; width: number; height: number }> {
    const url = URL.createObjectURL(file);
    const img = new Image();
    await new Promise<void>((resolve, reject) => {
      img.onload = () => resolve();
      img.onerror = () => reject(new Error("could not decode image"));
      img.src = url;
    });
    return { url, width: img.naturalWidth, height: img.naturalHeight };
  }

  async onSourcePicked(file: File): Promise<void> {
    const { url, width, height } = await this.loadImage(file);
    this.sessionId = await this.client.createSession(file);
    byId<HTMLImageElement>("source-image").src = url;
    byId<HTMLImageElement>("before-image").src = url;
    const canvas = byId<HTMLCanvasElement>("source-overlay");
    this.sourceCanvas = new ScribbleCanvas(
      canvas,
      this.layer,
      width,
      height,
      () => (this.tool && this.tool.on === "source" ? this.tool : null),
      (reason) => this.toast(reason),
      () => this.refresh(),
    );
    this.setStatusLine(`session ${this.sessionId.slice(0, 8)}…`);
    this.refresh();
  }

  async onTargetPicked(file: File): Promise<void> {
    if (!this.sessionId) {
      this.toast("load a source image first");
      return;
    }
    const { url, width, height } = await this.loadImage(file);
    const tid = await this.client.addTarget(this.sessionId, file);
    this.targetIds.push(tid);
    this.activeTarget = tid;
    byId<HTMLImageElement>("target-image").src = url;
    const canvas = byId<HTMLCanvasElement>("target-overlay");
    this.targetCanvas = new ScribbleCanvas(
      canvas,
      this.layer,
      width,
      height,
      () => (this.tool && this.tool.on === "target" ? { ...this.tool, targetId: this.activeTarget } : null),
      (reason) => this.toast(reason),
      () => this.refresh(),
    );
    this.refresh();
  }

  async solve(mode: "full" | "preview"): Promise<void> {
    if (!this.sessionId) return;
    this.setStatusLine(`solving (${mode})…`);
    this.refresh();
    try {
      const bytes = await this.controller.submitAndSolve(this.sessionId, mode);
      const blob = new Blob([bytes], { type: "image/png" });
      byId<HTMLImageElement>("after-image").src = URL.createObjectURL(blob);
      this.setStatusLine(`${mode} done`);
      if (!this.slider) {
        this.slider = new CompareSlider(
          byId<HTMLDivElement>("compare"),
          byId<HTMLDivElement>("after-layer"),
          byId<HTMLDivElement>("compare-handle"),
        );
      }
    } catch (err) {
      this.setStatusLine(err instanceof Error ? err.message : "solve failed");
    } finally {
      this.refresh();
    }
  }

  buildToolbar(): void {
    const bar = byId<HTMLDivElement>("pair-tools");
    for (let i = 0; i < MAX_PAIRS; i++) {
      for (const on of ["source", "target"] as const) {
        const btn = document.createElement("button");
        btn.textContent = `pair ${i + 1} ${on === "source" ? "src" : "tgt"}`;
        btn.style.borderColor = PAIR_TINTS[i];
        btn.addEventListener("click", () => {
          this.tool = { kind: "pair", pairId: i, on, targetId: this.activeTarget };
          this.setStatusLine(`tool: ${btn.textContent}`);
        });
        bar.appendChild(btn);
      }
    }
    const keep = byId<HTMLButtonElement>("keep-tool");
    keep.style.borderColor = KEEP_TINT;
    keep.addEventListener("click", () => {
      this.tool = { kind: "keep", pairId: null, on: "source", targetId: null };
      this.setStatusLine("tool: keep");
    });
  }

  wire(): void {
    this.buildToolbar();
    byId<HTMLInputElement>("source-file").addEventListener("change", (e) => {
      const file = (e.target as HTMLInputElement).files?.[0];
      if (file) void this.onSourcePicked(file).catch((err) => this.toast(String(err)));
    });
    byId<HTMLInputElement>("target-file").addEventListener("change", (e) => {
      const file = (e.target as HTMLInputElement).files?.[0];
      if (file) void this.onTargetPicked(file).catch((err) => this.toast(String(err)));
    });
    byId<HTMLButtonElement>("solve-full").addEventListener("click", () => void this.solve("full"));
    byId<HTMLButtonElement>("solve-preview").addEventListener("click", () => void this.solve("preview"));
    this.refresh();
  }
}

new App().wire();
