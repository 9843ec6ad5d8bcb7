import { describe, expect, it } from "vitest";

import { pointInPolygon } from "../src/projection.js";
import { buildColors } from "../src/surfaceview.js";
import { ApiClient } from "../src/api.js";
import { ViewState } from "../src/state.js";
import { FakeService } from "./fake_service.js";

describe("pointInPolygon", () => {
  const square = [
    [0, 0],
    [10, 0],
    [10, 10],
    [0, 10],
  ];

  it("accepts interior and rejects exterior points", () => {
    expect(pointInPolygon(5, 5, square)).toBe(true);
    expect(pointInPolygon(11, 5, square)).toBe(false);
    expect(pointInPolygon(-1, -1, square)).toBe(false);
  });

  it("handles concave lassos", () => {
    const concave = [
      [0, 0],
      [10, 0],
      [10, 10],
      [5, 3],
      [0, 10],
    ];
    expect(pointInPolygon(5, 8, concave)).toBe(false); // inside the notch
    expect(pointInPolygon(2, 3, concave)).toBe(true);
  });
});

describe("surface view coloring", () => {
  it("matched vertices get the highlight color, others dim", async () => {
    const service = new FakeService({ vertices: 32 });
    const state = new ViewState(new ApiClient("http://fake", service.fetch));
    await state.loadDataset("demo");
    await state.addSurface("demo:surf_0");
    await state.setDelta2(0);
    await state.selectPatch({ surfaceId: "demo:surf_0", patchId: 0 });
    const surface = state.surfaces[0];
    const colors = buildColors(surface, state);
    const matchedVerts = new Set(state.match!.matches.flatMap((m) => m.vertices));
    for (let v = 0; v < 32; v++) {
      if (matchedVerts.has(v)) {
        expect(colors[4 * v + 3]).toBe(1.0);
      } else {
        expect(colors[4 * v + 3]).toBeLessThan(1.0); // transparency on unmatched
      }
    }
    state.toggleTransparency();
    const opaque = buildColors(surface, state);
    for (let v = 0; v < 32; v++) expect(opaque[4 * v + 3]).toBe(1.0);
  });
});
