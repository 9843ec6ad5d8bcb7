import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ViewState } from "../src/state.js";
import { FakeService } from "./fake_service.js";

let service: FakeService;
let state: ViewState;

beforeEach(async () => {
  service = new FakeService();
  state = new ViewState(new ApiClient("http://fake", service.fetch));
  await state.loadDataset("demo");
});

describe("gallery interactions", () => {
  it("selecting a cluster repopulates the member list", () => {
    expect(state.activeMembers.length).toBe(4);
    state.selectCluster(1);
    expect(state.activeMembers.length).toBe(2);
    expect(state.activeMembers[0]).toBe("demo:surf_4");
  });

  it("adding a member loads its mesh and switches to patch-level projection", async () => {
    expect(state.projectionMode).toBe("surface-level");
    await state.addSurface("demo:surf_0");
    expect(state.surfaces.length).toBe(1);
    expect(state.surfaces[0].mesh.vertices.length).toBe(64);
    expect(state.projectionMode).toBe("patch-level");
  });

  it("adding a second surface re-queries matching on the fly", async () => {
    await state.addSurface("demo:surf_0");
    await state.selectPatch({ surfaceId: "demo:surf_0", patchId: 1 });
    const callsAfterSelect = service.matchCalls;
    await state.addSurface("demo:surf_1");
    expect(service.matchCalls).toBe(callsAfterSelect + 1);
    expect(state.match!.matches.some((m) => m.surface_id === "demo:surf_1")).toBe(true);
  });
});

describe("patch selection", () => {
  beforeEach(async () => {
    await state.addSurface("demo:surf_0");
  });

  it("a click fires exactly one match request", async () => {
    await state.selectPatch({ surfaceId: "demo:surf_0", patchId: 0 });
    expect(service.matchCalls).toBe(1);
    expect(state.match!.query.patch_id).toBe(0);
  });

  it("the query's own patch is always in the match set", async () => {
    await state.setDelta2(0);
    await state.selectPatch({ surfaceId: "demo:surf_0", patchId: 2 });
    expect(state.match!.matches.length).toBe(1);
    expect(state.match!.matches[0].patch_id).toBe(2);
  });

  it("highlighted vertices come verbatim from the response", async () => {
    await state.selectPatch({ surfaceId: "demo:surf_0", patchId: 1 });
    const highlighted = state.highlightedVertices().get("demo:surf_0")!;
    const fromResponse = state.match!.matches.flatMap((m) => m.vertices);
    expect(highlighted).toEqual(fromResponse);
  });

  it("lasso keeps multiple patches and the patch view shows the last", () => {
    state.selectPatches([
      { surfaceId: "demo:surf_0", patchId: 0 },
      { surfaceId: "demo:surf_0", patchId: 2 },
      { surfaceId: "demo:surf_0", patchId: 3 },
    ]);
    expect(state.selectedPatches.length).toBe(3);
    expect(state.lastSelectedPatch).toEqual({ surfaceId: "demo:surf_0", patchId: 3 });
  });

  it("clearing selection drops the query and match", async () => {
    await state.selectPatch({ surfaceId: "demo:surf_0", patchId: 1 });
    state.clearSelection();
    expect(state.selectedPatches.length).toBe(0);
    expect(state.match).toBeNull();
    expect(state.queryPatch).toBeNull();
  });

  it("rejects patch selection on an unselected surface", async () => {
    await expect(
      state.selectPatch({ surfaceId: "demo:surf_5", patchId: 0 }),
    ).rejects.toThrow(/unselected surface/);
  });
});

describe("slider semantics", () => {
  beforeEach(async () => {
    await state.addSurface("demo:surf_0");
  });

  it("raising delta1 never increases the on-screen patch count", async () => {
    let previous = Infinity;
    for (const d1 of [10, 30, 50, 70, 90]) {
      await state.setDelta1(d1);
      const count = state.surfaces[0].patches.patch_count;
      expect(count).toBeLessThanOrEqual(previous);
      previous = count;
    }
  });

  it("delta1 change refetches patches and invalidates the active query", async () => {
    await state.selectPatch({ surfaceId: "demo:surf_0", patchId: 1 });
    const patchCallsBefore = service.patchCalls.length;
    await state.setDelta1(70);
    expect(service.patchCalls.length).toBe(patchCallsBefore + 1);
    expect(state.queryPatch).toBeNull();
    expect(state.match).toBeNull();
  });

  it("delta2 change re-posts the match only and the set grows monotonically", async () => {
    await state.selectPatch({ surfaceId: "demo:surf_0", patchId: 1 });
    const patchCallsBefore = service.patchCalls.length;
    let previous = new Set<string>();
    for (const d2 of [0, 30, 50, 70, 100]) {
      await state.setDelta2(d2);
      const current = new Set(
        state.match!.matches.map((m) => `${m.surface_id}#${m.patch_id}`),
      );
      for (const key of previous) expect(current.has(key)).toBe(true);
      previous = current;
    }
    expect(service.patchCalls.length).toBe(patchCallsBefore);
  });
});
