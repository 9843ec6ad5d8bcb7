// Bootstrap: wire the API client, state, and views to the page.

import { ApiClient } from "./api.js";
import { Gallery } from "./gallery.js";
import { PatchView } from "./patchview.js";
import { ProjectionView } from "./projection.js";
import { SurfaceView } from "./surfaceview.js";
import { ViewState } from "./state.js";
import { createRenderer } from "./viewer.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export async function boot(base = ""): Promise<ViewState> {
  const api = new ApiClient(base);
  const state = new ViewState(api);

  const surfaceCanvas = el<HTMLCanvasElement>("surface-canvas");
  const patchCanvas = el<HTMLCanvasElement>("patch-canvas");
  const projectionCanvas = el<HTMLCanvasElement>("projection-canvas");

  new SurfaceView(createRenderer(surfaceCanvas), state, surfaceCanvas, el("tooltip"));
  new PatchView(createRenderer(patchCanvas), state, el("patch-label"));
  const projection = new ProjectionView(projectionCanvas, state, api);
  new Gallery(el("gallery-reps"), el("gallery-members"), state);

  const delta1 = el<HTMLInputElement>("delta1");
  const delta2 = el<HTMLInputElement>("delta2");
  const delta1Value = el("delta1-value");
  const delta2Value = el("delta2-value");
  delta1.addEventListener("input", () => (delta1Value.textContent = delta1.value));
  delta2.addEventListener("input", () => (delta2Value.textContent = delta2.value));
  delta1.addEventListener("change", () => void state.setDelta1(Number(delta1.value)));
  delta2.addEventListener("change", () => void state.setDelta2(Number(delta2.value)));
  el<HTMLInputElement>("transparency").addEventListener("change", () =>
    state.toggleTransparency(),
  );

  const patchCount = el("patch-count");
  state.subscribe(() => {
    const total = state.surfaces.reduce((acc, s) => acc + s.patches.patch_count, 0);
    patchCount.textContent = state.surfaces.length
      ? `${total} patches over ${state.surfaces.length} surface(s)`
      : "no surfaces selected";
    const matchCount = el("match-count");
    matchCount.textContent = state.match
      ? `${state.match.matches.length} matched patch(es)`
      : "";
  });

  const picker = el<HTMLSelectElement>("dataset-picker");
  const { datasets } = await api.datasets();
  for (const ds of datasets) {
    const option = document.createElement("option");
    option.value = ds.id;
    option.textContent = `${ds.id} (${ds.surface_count})`;
    picker.appendChild(option);
  }
  picker.addEventListener("change", () => {
    void state.loadDataset(picker.value).then(() => projection.showDataset(picker.value));
  });
  if (datasets.length) {
    picker.value = datasets[0].id;
    await state.loadDataset(datasets[0].id);
    await projection.showDataset(datasets[0].id);
  }
  return state;
}

declare global {
  interface Window {
    surfpatch?: ViewState;
  }
}

if (typeof document !== "undefined" && document.getElementById("surface-canvas")) {
  boot()
    .then((state) => {
      window.surfpatch = state;
    })
    .catch((err) => {
      const status = document.getElementById("patch-count");
      if (status) status.textContent = `failed to start: ${err}`;
    });
}
