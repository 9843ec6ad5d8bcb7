// 3D surface view: per-patch vertex coloring, match highlighting, hover tooltip.

import { HIGHLIGHT, QUERY, patchColor } from "./colors.js";
import { Renderer } from "./viewer.js";
import { SurfaceData, ViewState } from "./state.js";

const DIM_ALPHA = 0.22;

export function buildBuffers(
  surface: SurfaceData,
  state: ViewState,
  offset: number,
): { positions: Float32Array; normals: Float32Array; colors: Float32Array; indices: Uint32Array } {
  const nv = surface.mesh.vertices.length;
  const positions = new Float32Array(nv * 3);
  const normals = new Float32Array(nv * 3);
  for (let i = 0; i < nv; i++) {
    positions[3 * i] = surface.mesh.vertices[i][0] + offset;
    positions[3 * i + 1] = surface.mesh.vertices[i][1];
    positions[3 * i + 2] = surface.mesh.vertices[i][2];
    normals[3 * i] = surface.mesh.normals[i][0];
    normals[3 * i + 1] = surface.mesh.normals[i][1];
    normals[3 * i + 2] = surface.mesh.normals[i][2];
  }
  const indices = new Uint32Array(surface.mesh.faces.length * 3);
  surface.mesh.faces.forEach((f, i) => {
    indices[3 * i] = f[0];
    indices[3 * i + 1] = f[1];
    indices[3 * i + 2] = f[2];
  });
  return { positions, normals, colors: buildColors(surface, state), indices };
}

export function buildColors(surface: SurfaceData, state: ViewState): Float32Array {
  const nv = surface.mesh.vertices.length;
  const colors = new Float32Array(nv * 4);
  const vertexPatch = new Int32Array(nv).fill(-1);
  for (const patch of surface.patches.patches) {
    for (const v of patch.vertices) vertexPatch[v] = patch.id;
  }
  const hasMatch = state.match !== null;
  const dim = state.transparency ? DIM_ALPHA : 1.0;
  for (let v = 0; v < nv; v++) {
    const [r, g, b] = patchColor(Math.max(vertexPatch[v], 0));
    colors[4 * v] = r;
    colors[4 * v + 1] = g;
    colors[4 * v + 2] = b;
    colors[4 * v + 3] = hasMatch ? dim : 1.0;
  }
  if (state.match) {
    for (const entry of state.match.matches) {
      if (entry.surface_id !== surface.id) continue;
      const isQuery =
        entry.surface_id === state.match.query.surface_id &&
        entry.patch_id === state.match.query.patch_id;
      const [r, g, b] = isQuery ? QUERY : HIGHLIGHT;
      // highlighted vertex ids come verbatim from the match response
      for (const v of entry.vertices) {
        colors[4 * v] = r;
        colors[4 * v + 1] = g;
        colors[4 * v + 2] = b;
        colors[4 * v + 3] = 1.0;
      }
    }
  }
  for (const selected of state.selectedPatches) {
    if (selected.surfaceId !== surface.id) continue;
    const patch = surface.patches.patches[selected.patchId];
    if (!patch) continue;
    for (const v of patch.vertices) {
      colors[4 * v] = QUERY[0];
      colors[4 * v + 1] = QUERY[1];
      colors[4 * v + 2] = QUERY[2];
      colors[4 * v + 3] = 1.0;
    }
  }
  return colors;
}

export class SurfaceView {
  private uploaded = new Set<string>();

  constructor(
    private renderer: Renderer,
    private state: ViewState,
    private canvas: HTMLCanvasElement,
    private tooltip: HTMLElement,
  ) {
    state.subscribe(() => this.sync());
    canvas.addEventListener("mousemove", (e) => this.hover(e));
  }

  private offsetOf(index: number): number {
    return index * 1.3 - ((this.state.surfaces.length - 1) * 1.3) / 2;
  }

  sync(): void {
    const ids = new Set(this.state.surfaces.map((s) => s.id));
    for (const id of [...this.uploaded]) {
      if (!ids.has(id)) {
        this.renderer.remove(id);
        this.uploaded.delete(id);
      }
    }
    this.state.surfaces.forEach((surface, index) => {
      if (!this.uploaded.has(surface.id)) {
        const buffers = buildBuffers(surface, this.state, this.offsetOf(index));
        this.renderer.upload({ id: surface.id, ...buffers });
        this.uploaded.add(surface.id);
      } else {
        this.renderer.updateColors(surface.id, buildColors(surface, this.state));
      }
    });
    this.renderer.render();
  }

  private hover(event: MouseEvent): void {
    const rect = this.canvas.getBoundingClientRect();
    const x = ((event.clientX - rect.left) / rect.width) * this.canvas.width;
    const y = ((event.clientY - rect.top) / rect.height) * this.canvas.height;
    let best: { surface: SurfaceData; vertex: number; d: number } | null = null;
    for (const surface of this.state.surfaces) {
      const screen = this.renderer.projectToScreen(surface.id);
      if (!screen) continue;
      for (let v = 0; v < screen.length / 2; v++) {
        const d = Math.hypot(screen[2 * v] - x, screen[2 * v + 1] - y);
        if (d < 9 && (!best || d < best.d)) best = { surface, vertex: v, d };
      }
    }
    if (!best) {
      this.tooltip.style.display = "none";
      return;
    }
    const patch = best.surface.patches.patches.find((p) =>
      p.vertices.includes(best!.vertex),
    );
    if (!patch) {
      this.tooltip.style.display = "none";
      return;
    }
    this.tooltip.style.display = "block";
    this.tooltip.style.left = `${event.clientX + 12}px`;
    this.tooltip.style.top = `${event.clientY + 12}px`;
    this.tooltip.textContent = `${best.surface.id} patch ${patch.id} (${patch.vertices.length} vertices)`;
  }
}
