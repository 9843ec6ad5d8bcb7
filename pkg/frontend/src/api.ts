// Typed client for the surfpatch query service. All surface ids handled here
// are dataset-qualified ("dataset:surface").

export interface DatasetInfo {
  id: string;
  field: string;
  surface_count: number;
  clustered: boolean;
  status: string;
}

export interface GalleryBlock {
  label: number;
  representative: string;
  size: number;
  members: string[];
}

export interface SurfaceMesh {
  surface: string;
  vertices: number[][];
  faces: number[][];
  normals: number[][];
}

export interface PatchInfo {
  id: number;
  vertices: number[];
}

export interface PatchesResponse {
  surface: string;
  delta1: number;
  patch_count: number;
  patches: PatchInfo[];
  projection: number[][];
}

export interface ProjectionResponse {
  dataset: string;
  surfaces: string[];
  points: number[][];
  labels: number[];
}

export interface MatchEntry {
  surface_id: string;
  patch_id: number;
  rank: number;
  vertices: number[];
}

export interface MatchResponse {
  query: { surface_id: string; patch_id: number };
  delta1: number;
  delta2: number;
  matches: MatchEntry[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) {
      throw new Error(`GET ${path} -> ${response.status}`);
    }
    return (await response.json()) as T;
  }

  datasets(): Promise<{ datasets: DatasetInfo[] }> {
    return this.get("/datasets");
  }

  gallery(dataset: string): Promise<{ dataset: string; clusters: GalleryBlock[] }> {
    return this.get(`/datasets/${encodeURIComponent(dataset)}/surfaces?order=gallery`);
  }

  surfaceProjection(dataset: string): Promise<ProjectionResponse> {
    return this.get(`/datasets/${encodeURIComponent(dataset)}/projection`);
  }

  mesh(surfaceId: string): Promise<SurfaceMesh> {
    return this.get(`/surfaces/${encodeURIComponent(surfaceId)}/mesh`);
  }

  patches(surfaceId: string, delta1: number): Promise<PatchesResponse> {
    return this.get(`/surfaces/${encodeURIComponent(surfaceId)}/patches?delta1=${delta1}`);
  }

  async match(body: {
    dataset: string;
    surface_ids: string[];
    query: { surface_id: string; patch_id: number };
    delta1: number;
    delta2: number;
  }): Promise<MatchResponse> {
    const response = await this.fetchFn(this.base + "/match", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new Error(`POST /match -> ${response.status}`);
    }
    return (await response.json()) as MatchResponse;
  }
}
