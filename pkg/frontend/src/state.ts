// Central view state and interaction rules. Views subscribe and re-render;
// all server interaction is read-only and funnelled through the ApiClient.

import {
  ApiClient,
  GalleryBlock,
  MatchResponse,
  PatchesResponse,
  SurfaceMesh,
} from "./api.js";

export interface PatchRef {
  surfaceId: string;
  patchId: number;
}

export interface SurfaceData {
  id: string;
  mesh: SurfaceMesh;
  patches: PatchesResponse;
}

export type ProjectionMode = "surface-level" | "patch-level";

export type Listener = () => void;

export class ViewState {
  dataset = "";
  galleryBlocks: GalleryBlock[] = [];
  activeCluster = 0;
  surfaces: SurfaceData[] = []; // ordered selection
  delta1 = 50;
  delta2 = 50;
  selectedPatches: PatchRef[] = []; // lasso/click selection; last entry drives the patch view
  queryPatch: PatchRef | null = null;
  match: MatchResponse | null = null;
  projectionMode: ProjectionMode = "surface-level";
  transparency = true;

  private listeners: Listener[] = [];
  private matchGeneration = 0;

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  surface(surfaceId: string): SurfaceData | undefined {
    return this.surfaces.find((s) => s.id === surfaceId);
  }

  get lastSelectedPatch(): PatchRef | null {
    return this.selectedPatches.length
      ? this.selectedPatches[this.selectedPatches.length - 1]
      : null;
  }

  async loadDataset(dataset: string): Promise<void> {
    this.dataset = dataset;
    const gallery = await this.api.gallery(dataset);
    this.galleryBlocks = gallery.clusters;
    this.activeCluster = 0;
    this.surfaces = [];
    this.selectedPatches = [];
    this.queryPatch = null;
    this.match = null;
    this.projectionMode = "surface-level";
    this.emit();
  }

  selectCluster(label: number): void {
    this.activeCluster = this.galleryBlocks.findIndex((b) => b.label === label);
    if (this.activeCluster < 0) this.activeCluster = 0;
    this.emit();
  }

  get activeMembers(): string[] {
    const block = this.galleryBlocks[this.activeCluster];
    return block ? block.members : [];
  }

  async addSurface(surfaceId: string): Promise<void> {
    if (this.surface(surfaceId)) return;
    const [mesh, patches] = await Promise.all([
      this.api.mesh(surfaceId),
      this.api.patches(surfaceId, this.delta1),
    ]);
    this.surfaces.push({ id: surfaceId, mesh, patches });
    this.projectionMode = "patch-level";
    this.emit();
    // matching updates on the fly when the selection grows
    if (this.queryPatch) await this.refreshMatch();
  }

  removeSurface(surfaceId: string): void {
    this.surfaces = this.surfaces.filter((s) => s.id !== surfaceId);
    this.selectedPatches = this.selectedPatches.filter((p) => p.surfaceId !== surfaceId);
    if (this.queryPatch?.surfaceId === surfaceId) {
      this.queryPatch = null;
      this.match = null;
    }
    if (!this.surfaces.length) this.projectionMode = "surface-level";
    this.emit();
  }

  /** Click on one projection point: single selection plus a match query. */
  async selectPatch(patch: PatchRef): Promise<void> {
    if (!this.surface(patch.surfaceId)) {
      throw new Error(`patch selected on unselected surface ${patch.surfaceId}`);
    }
    this.selectedPatches = [patch];
    this.queryPatch = patch;
    this.emit();
    await this.refreshMatch();
  }

  /** Lasso: multi-selection; the patch view shows only the last entry. */
  selectPatches(patches: PatchRef[]): void {
    this.selectedPatches = patches.filter((p) => this.surface(p.surfaceId));
    this.emit();
  }

  clearSelection(): void {
    this.selectedPatches = [];
    this.queryPatch = null;
    this.match = null;
    this.emit();
  }

  async setDelta1(value: number): Promise<void> {
    this.delta1 = value;
    // re-fetch segmentations; the active query's patch ids are stale now
    const updated = await Promise.all(
      this.surfaces.map(async (s) => ({
        ...s,
        patches: await this.api.patches(s.id, value),
      })),
    );
    this.surfaces = updated;
    this.selectedPatches = [];
    this.queryPatch = null;
    this.match = null;
    this.emit();
  }

  async setDelta2(value: number): Promise<void> {
    this.delta2 = value;
    this.emit();
    if (this.queryPatch) await this.refreshMatch();
  }

  toggleTransparency(): void {
    this.transparency = !this.transparency;
    this.emit();
  }

  async refreshMatch(): Promise<void> {
    const query = this.queryPatch;
    if (!query || !this.surfaces.length) return;
    const generation = ++this.matchGeneration;
    const response = await this.api.match({
      dataset: this.dataset,
      surface_ids: this.surfaces.map((s) => s.id),
      query: { surface_id: query.surfaceId, patch_id: query.patchId },
      delta1: this.delta1,
      delta2: this.delta2,
    });
    if (generation !== this.matchGeneration) return; // superseded in flight
    this.match = response;
    this.emit();
  }

  /** Vertex ids to highlight per surface, verbatim from the last match result. */
  highlightedVertices(): Map<string, number[]> {
    const out = new Map<string, number[]>();
    if (!this.match) return out;
    for (const entry of this.match.matches) {
      const existing = out.get(entry.surface_id) ?? [];
      out.set(entry.surface_id, existing.concat(entry.vertices));
    }
    return out;
  }
}
