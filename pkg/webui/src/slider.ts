/**
 * Before/after comparison: the result layer sits on top of the source and
 * is clipped at a draggable vertical split.
 */
export class CompareSlider {
  private split = 0.5;
  private dragging = false;

  constructor(
    private container: HTMLElement,
    private topLayer: HTMLElement,
    private handle: HTMLElement,
  ) {
    handle.addEventListener("pointerdown", (e) => {
      this.dragging = true;
      handle.setPointerCapture(e.pointerId);
    });
    handle.addEventListener("pointerup", (e) => {
      this.dragging = false;
      handle.releasePointerCapture(e.pointerId);
    });
    handle.addEventListener("pointermove", (e) => {
      if (!this.dragging) return;
      const rect = container.getBoundingClientRect();
      this.setSplit((e.clientX - rect.left) / rect.width);
    });
    this.apply();
  }

  setSplit(fraction: number): void {
    this.split = Math.min(Math.max(fraction, 0), 1);
    this.apply();
  }

  private apply(): void {
    const pct = this.split * 100;
    this.topLayer.style.clipPath = `inset(0 ${100 - pct}% 0 0)`;
    this.handle.style.left = `${pct}%`;
  }
}
