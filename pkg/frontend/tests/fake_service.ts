// In-memory stand-in for the query service, faithful to the API contract:
// delta1 drives a non-increasing patch count, delta2 drives nested match sets.

import { FetchLike } from "../src/api.js";

export interface FakeOptions {
  surfaces?: number;
  vertices?: number;
}

export class FakeService {
  matchCalls = 0;
  patchCalls: string[] = [];
  private readonly nSurfaces: number;
  private readonly nVertices: number;

  constructor(options: FakeOptions = {}) {
    this.nSurfaces = options.surfaces ?? 6;
    this.nVertices = options.vertices ?? 64;
  }

  private surfaceIds(): string[] {
    return Array.from({ length: this.nSurfaces }, (_, i) => `demo:surf_${i}`);
  }

  /** patch count decreases with delta1; partitions stay nested. */
  patchCount(delta1: number): number {
    return Math.max(1, Math.round(16 / 2 ** (delta1 / 25)));
  }

  private patches(delta1: number) {
    const count = this.patchCount(delta1);
    const per = Math.floor(this.nVertices / count);
    const patches = [];
    for (let p = 0; p < count; p++) {
      const start = p * per;
      const end = p === count - 1 ? this.nVertices : start + per;
      patches.push({
        id: p,
        vertices: Array.from({ length: end - start }, (_, i) => start + i),
      });
    }
    return patches;
  }

  fetch: FetchLike = async (input, init) => {
    const url = new URL(input, "http://fake");
    const path = decodeURIComponent(url.pathname);
    const json = (body: unknown, status = 200) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { "content-type": "application/json" },
      });

    if (path === "/datasets") {
      return json({
        datasets: [
          {
            id: "demo",
            field: "tornado",
            surface_count: this.nSurfaces,
            clustered: true,
            status: "ready",
          },
        ],
      });
    }
    if (path === "/datasets/demo/surfaces") {
      const ids = this.surfaceIds();
      return json({
        dataset: "demo",
        clusters: [
          { label: 0, representative: ids[0], size: 4, members: ids.slice(0, 4) },
          { label: 1, representative: ids[4], size: 2, members: ids.slice(4) },
        ],
      });
    }
    if (path === "/datasets/demo/projection") {
      const ids = this.surfaceIds();
      return json({
        dataset: "demo",
        surfaces: ids,
        points: ids.map((_, i) => [Math.cos(i), Math.sin(i)]),
        labels: ids.map((_, i) => (i < 4 ? 0 : 1)),
      });
    }
    const meshMatch = path.match(/^\/surfaces\/(.+)\/mesh$/);
    if (meshMatch) {
      const vertices = Array.from({ length: this.nVertices }, (_, i) => [
        Math.cos(i * 0.3),
        Math.sin(i * 0.3),
        i / this.nVertices,
      ]);
      return json({
        surface: meshMatch[1],
        vertices,
        normals: vertices.map(() => [0, 0, 1]),
        faces: Array.from({ length: this.nVertices - 2 }, (_, i) => [i, i + 1, i + 2]),
      });
    }
    const patchesMatch = path.match(/^\/surfaces\/(.+)\/patches$/);
    if (patchesMatch) {
      const delta1 = Number(url.searchParams.get("delta1") ?? "50");
      if (delta1 < 0 || delta1 > 100) return json({ error: "delta1" }, 422);
      this.patchCalls.push(`${patchesMatch[1]}@${delta1}`);
      const patches = this.patches(delta1);
      return json({
        surface: patchesMatch[1],
        delta1,
        patch_count: patches.length,
        patches,
        projection: patches.map((p) => [p.id * 1.0, (p.id % 3) * 1.0]),
      });
    }
    if (path === "/match" && init?.method === "POST") {
      this.matchCalls += 1;
      const body = JSON.parse(String(init.body));
      const delta1 = body.delta1 as number;
      const delta2 = body.delta2 as number;
      if (delta2 < 0 || delta2 > 100) return json({ error: "delta2" }, 422);
      const patches = this.patches(delta1);
      const query = body.query as { surface_id: string; patch_id: number };
      // nested growth: the query patch always matches; higher delta2 admits
      // more patches (by id distance) across every selected surface
      const span = Math.floor((delta2 / 100) * patches.length);
      const matches = [];
      let rank = 0;
      for (const sid of body.surface_ids as string[]) {
        for (const patch of patches) {
          const self = sid === query.surface_id && patch.id === query.patch_id;
          const near = Math.abs(patch.id - query.patch_id) <= span && delta2 > 0;
          if (self || (near && span > 0)) {
            matches.push({
              surface_id: sid,
              patch_id: patch.id,
              rank: rank++,
              vertices: patch.vertices,
            });
          }
        }
      }
      matches.sort((a, b) =>
        a.surface_id === query.surface_id && a.patch_id === query.patch_id ? -1 : 0,
      );
      return json({ query, delta1, delta2, matches });
    }
    return json({ error: `unknown ${path}` }, 404);
  };
}
