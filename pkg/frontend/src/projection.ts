// 2D projection view on a canvas: surface-level (dataset overview) or
// patch-level (last selected surface), with point click and lasso selection.

import { ApiClient, ProjectionResponse } from "./api.js";
import { clusterColor } from "./colors.js";
import { PatchRef, ViewState } from "./state.js";

export function pointInPolygon(x: number, y: number, polygon: number[][]): boolean {
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const [xi, yi] = polygon[i];
    const [xj, yj] = polygon[j];
    if (yi > y !== yj > y && x < ((xj - xi) * (y - yi)) / (yj - yi) + xi) {
      inside = !inside;
    }
  }
  return inside;
}

interface ScreenPoint {
  x: number;
  y: number;
  ref: PatchRef | string; // PatchRef in patch mode, surface id in surface mode
}

export class ProjectionView {
  private surfaceProjection: ProjectionResponse | null = null;
  private points: ScreenPoint[] = [];
  private lasso: number[][] = [];
  private dragging = false;
  private downAt: [number, number] | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private state: ViewState,
    private api: ApiClient,
  ) {
    state.subscribe(() => this.draw());
    canvas.addEventListener("mousedown", (e) => this.onDown(e));
    canvas.addEventListener("mousemove", (e) => this.onMove(e));
    window.addEventListener("mouseup", (e) => void this.onUp(e));
  }

  async showDataset(dataset: string): Promise<void> {
    this.surfaceProjection = await this.api.surfaceProjection(dataset);
    this.draw();
  }

  private toCanvas(e: MouseEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [
      ((e.clientX - rect.left) / rect.width) * this.canvas.width,
      ((e.clientY - rect.top) / rect.height) * this.canvas.height,
    ];
  }

  private layout(): void {
    this.points = [];
    const w = this.canvas.width;
    const h = this.canvas.height;
    let raw: { p: number[]; ref: PatchRef | string; label: number }[] = [];
    if (this.state.projectionMode === "patch-level" && this.state.surfaces.length) {
      const surface = this.state.surfaces[this.state.surfaces.length - 1];
      raw = surface.patches.projection.map((p, i) => ({
        p,
        ref: { surfaceId: surface.id, patchId: i },
        label: i,
      }));
    } else if (this.surfaceProjection) {
      raw = this.surfaceProjection.points.map((p, i) => ({
        p,
        ref: this.surfaceProjection!.surfaces[i],
        label: this.surfaceProjection!.labels[i],
      }));
    }
    if (!raw.length) return;
    const xs = raw.map((r) => r.p[0]);
    const ys = raw.map((r) => r.p[1]);
    const xmin = Math.min(...xs), xmax = Math.max(...xs);
    const ymin = Math.min(...ys), ymax = Math.max(...ys);
    const sx = (xmax - xmin) || 1;
    const sy = (ymax - ymin) || 1;
    for (const r of raw) {
      this.points.push({
        x: 20 + ((r.p[0] - xmin) / sx) * (w - 40),
        y: 20 + ((r.p[1] - ymin) / sy) * (h - 40),
        ref: r.ref,
      });
    }
  }

  draw(): void {
    this.layout();
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.fillStyle = "#15171c";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    const selected = new Set(
      this.state.selectedPatches.map((p) => `${p.surfaceId}#${p.patchId}`),
    );
    const matched = new Set(
      (this.state.match?.matches ?? []).map((m) => `${m.surface_id}#${m.patch_id}`),
    );
    this.points.forEach((pt, i) => {
      let fill = "#7a8aa0";
      let radius = 3.5;
      if (typeof pt.ref === "string") {
        fill = clusterColor(this.surfaceProjection?.labels[i] ?? 0);
      } else {
        const key = `${pt.ref.surfaceId}#${pt.ref.patchId}`;
        if (matched.has(key)) {
          fill = "#ffd61a";
          radius = 4.5;
        }
        if (selected.has(key)) {
          fill = "#ff4d33";
          radius = 5.0;
        }
      }
      ctx.beginPath();
      ctx.arc(pt.x, pt.y, radius, 0, Math.PI * 2);
      ctx.fillStyle = fill;
      ctx.fill();
    });
    if (this.lasso.length > 1) {
      ctx.strokeStyle = "#5ad1ff";
      ctx.setLineDash([4, 3]);
      ctx.beginPath();
      ctx.moveTo(this.lasso[0][0], this.lasso[0][1]);
      for (const [x, y] of this.lasso.slice(1)) ctx.lineTo(x, y);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }

  private onDown(e: MouseEvent): void {
    this.downAt = this.toCanvas(e);
    this.dragging = false;
    this.lasso = [this.downAt];
  }

  private onMove(e: MouseEvent): void {
    if (!this.downAt) return;
    const p = this.toCanvas(e);
    if (Math.hypot(p[0] - this.downAt[0], p[1] - this.downAt[1]) > 6) {
      this.dragging = true;
    }
    if (this.dragging) {
      this.lasso.push(p);
      this.draw();
    }
  }

  private async onUp(e: MouseEvent): Promise<void> {
    if (!this.downAt) return;
    const wasDragging = this.dragging;
    const downAt = this.downAt;
    this.downAt = null;
    this.dragging = false;
    const polygon = this.lasso;
    this.lasso = [];
    if (wasDragging && polygon.length > 2) {
      const caught = this.points.filter(
        (pt) => typeof pt.ref !== "string" && pointInPolygon(pt.x, pt.y, polygon),
      );
      this.state.selectPatches(caught.map((pt) => pt.ref as PatchRef));
      this.draw();
      return;
    }
    // plain click: nearest point within 10 px, otherwise clear
    let best: { pt: ScreenPoint; d: number } | null = null;
    for (const pt of this.points) {
      const d = Math.hypot(pt.x - downAt[0], pt.y - downAt[1]);
      if (d < 10 && (!best || d < best.d)) best = { pt, d };
    }
    if (!best) {
      this.state.clearSelection();
      return;
    }
    if (typeof best.pt.ref === "string") {
      await this.state.addSurface(best.pt.ref);
    } else {
      await this.state.selectPatch(best.pt.ref);
    }
  }
}
