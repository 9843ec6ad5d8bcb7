// Patch view: the last selected patch rendered alone on its dimmed surface.

import { QUERY } from "./colors.js";
import { Renderer } from "./viewer.js";
import { ViewState } from "./state.js";
import { buildBuffers } from "./surfaceview.js";

export class PatchView {
  private shownKey = "";

  constructor(
    private renderer: Renderer,
    private state: ViewState,
    private label: HTMLElement,
  ) {
    state.subscribe(() => this.sync());
  }

  sync(): void {
    const last = this.state.lastSelectedPatch;
    if (!last) {
      if (this.shownKey) {
        this.renderer.clearMeshes();
        this.renderer.render();
        this.shownKey = "";
        this.label.textContent = "no patch selected";
      }
      return;
    }
    const key = `${last.surfaceId}#${last.patchId}`;
    if (key === this.shownKey) return;
    const surface = this.state.surface(last.surfaceId);
    if (!surface) return;
    const patch = surface.patches.patches[last.patchId];
    if (!patch) return;
    const buffers = buildBuffers(surface, this.state, 0);
    const colors = new Float32Array(buffers.colors.length);
    for (let v = 0; v < colors.length / 4; v++) {
      colors[4 * v] = 0.5;
      colors[4 * v + 1] = 0.55;
      colors[4 * v + 2] = 0.6;
      colors[4 * v + 3] = 0.07;
    }
    for (const v of patch.vertices) {
      colors[4 * v] = QUERY[0];
      colors[4 * v + 1] = QUERY[1];
      colors[4 * v + 2] = QUERY[2];
      colors[4 * v + 3] = 1.0;
    }
    this.renderer.clearMeshes();
    this.renderer.upload({ id: "patch", ...buffers, colors });
    this.renderer.render();
    this.shownKey = key;
    this.label.textContent = `${last.surfaceId} / patch ${last.patchId} (${patch.vertices.length} vertices)`;
  }
}
