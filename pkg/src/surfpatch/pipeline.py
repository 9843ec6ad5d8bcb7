"""Three-stage pipeline: preprocessing, patch segmentation, patch matching, surface clustering."""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from surfpatch.embedding import Embedding2D, tsne_2d, umap_aggregate, umap_embed
from surfpatch.hierarchy import (
    LinkageTree,
    Partition,
    ahc_ward,
    cut_threshold,
    representative,
)
from surfpatch.mesh import Mesh, adjacency, connected_components, normalize_unit_box
from surfpatch.metrics import MetricError, chamfer, hausdorff, rmse
from surfpatch.simplify import SimplifyParams, simplify_qem
from surfpatch.spectral import build_cotangent_laplacian, compute_hks, heat_trace, solve_eigenpairs
from surfpatch.store import FeatureStore, SurfaceRecord


@dataclass(frozen=True)
class PipelineConfig:
    """Preprocessing and query defaults shared across a dataset.

    patch_feature selects how vertex signatures aggregate into patch and
    surface descriptors: "signature_profile" (per-column dispersion profile
    for patches, log heat trace for surfaces) or "umap_aggregate" (1-D column
    embedding). The profile mode is the default because the 1-D layout of a
    smooth signature-column chain is close to seed noise at desk scale.
    """

    epsilon: float = 0.5
    min_vertices: int = 1200
    d: int = 128
    k: int = 128
    dataset_seed: int = 0
    tsne_perplexity: float = 30.0
    tsne_iterations: int = 500
    umap_neighbors: int = 15
    umap_min_dist: float = 0.1
    umap_epochs: int = 200
    cluster_on: str = "features"  # "features" (d-dim) or "projection" (2-D view)
    patch_feature: str = "signature_profile"  # or "umap_aggregate"


def surface_seed(dataset_seed: int, surface_id: str) -> int:
    """Stable per-surface seed derived from the dataset seed and surface id."""
    digest = hashlib.sha256(f"{dataset_seed}:{surface_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little") % (2**63)


def preprocess_surface(
    mesh: Mesh,
    surface_id: str,
    config: PipelineConfig,
    timings: dict | None = None,
) -> SurfaceRecord:
    """Normalize, simplify, solve the spectrum, compute signatures, and project to 2D.

    ``timings``, when given, collects per-stage wall-clock seconds (kept out of
    the stored record so re-runs stay bit-identical).
    """
    clock = time.perf_counter
    graph = adjacency(mesh)
    n_components = int(connected_components(graph).max()) + 1 if mesh.n_vertices else 0
    if n_components != 1:
        raise ValueError(
            f"{surface_id}: mesh has {n_components} connected components; "
            "process components separately"
        )
    seed = surface_seed(config.dataset_seed, surface_id)
    t0 = clock()
    normalized, _ = normalize_unit_box(mesh)
    simplified = simplify_qem(
        normalized, SimplifyParams(epsilon=config.epsilon, min_vertices=config.min_vertices)
    )
    simplified = Mesh(simplified.vertices, simplified.faces, name=surface_id)
    t1 = clock()
    op = build_cotangent_laplacian(simplified)
    k = min(config.k, simplified.n_vertices - 2)
    basis = solve_eigenpairs(op, k, seed=seed)
    hks = compute_hks(basis, op.mass, d=config.d)
    trace = heat_trace(basis, d=config.d)
    t2 = clock()
    perplexity = min(config.tsne_perplexity, (simplified.n_vertices - 1) / 3.0 - 1e-6)
    projection = tsne_2d(
        hks.features,
        perplexity=perplexity,
        iterations=config.tsne_iterations,
        seed=seed,
    )
    t3 = clock()
    if timings is not None:
        timings["simplification"] = t1 - t0
        timings["hks"] = t2 - t1
        timings["dr"] = t3 - t2
    meta = {
        "surface_id": surface_id,
        "seed": seed,
        "n_vertices_input": mesh.n_vertices,
        "n_vertices": simplified.n_vertices,
        "k": k,
        "d": config.d,
        "epsilon": config.epsilon,
        "tsne_perplexity": perplexity,
        "tsne_iterations": config.tsne_iterations,
        "heat_trace": trace.tolist(),
    }
    return SurfaceRecord(
        surface_id=surface_id,
        mesh=simplified,
        hks=hks,
        vertex_projection=projection,
        meta=meta,
    )


# ---------------------------------------------------------------------------
# Vertex-level segmentation


@dataclass(frozen=True)
class PatchSegmentation:
    """Partition of one surface's vertices into adjacency-connected patches."""

    surface_id: str
    delta1: float
    partition: Partition
    patches: list[np.ndarray]

    @property
    def n_patches(self) -> int:
        return self.partition.cluster_count


def vertex_tree(record: SurfaceRecord) -> LinkageTree:
    """Constrained Ward dendrogram over the 2D vertex projection."""
    return ahc_ward(record.vertex_projection.points, adjacency(record.mesh))


SLIDER_SPAN = 300.0


def delta_from_slider(tree: LinkageTree, slider: float) -> float:
    """Map a 0-100 slider value onto an absolute cut distance for this tree.

    0 maps to 0 (all singletons) and 100 to the top finite merge distance
    (fully agglomerated); intermediate values interpolate geometrically over
    a fixed 300x span below the top. Ward merge distances grow roughly
    exponentially along the merge sequence, so the geometric scale is what
    makes the slider sweep granularity smoothly; a linear-in-distance map
    parks everything above ~20 at a handful of clusters.
    """
    if not 0.0 <= slider <= 100.0:
        raise ValueError(f"slider value {slider} outside [0, 100]")
    if slider == 0.0 or tree.n_finite == 0:
        return 0.0
    hi = tree.max_finite_distance()
    if hi <= 0.0:
        return 0.0
    return hi * SLIDER_SPAN ** (slider / 100.0 - 1.0)


def segment_patches(
    record: SurfaceRecord, delta1: float, tree: LinkageTree | None = None
) -> PatchSegmentation:
    """Cut the constrained vertex dendrogram at an absolute distance threshold."""
    if tree is None:
        tree = vertex_tree(record)
    partition = cut_threshold(tree, delta1)
    patches = [partition.members(label) for label in range(partition.cluster_count)]
    return PatchSegmentation(
        surface_id=record.surface_id, delta1=delta1, partition=partition, patches=patches
    )


# ---------------------------------------------------------------------------
# Patch-level embedding and matching

PatchId = tuple[str, int]


@dataclass(frozen=True)
class PatchEmbedding:
    """Aggregated patch features (one row per patch) plus a 2D display projection."""

    patch_ids: list[PatchId]
    features: np.ndarray
    projection: Embedding2D
    vertex_lists: dict[PatchId, np.ndarray] = field(repr=False, default_factory=dict)

    def index_of(self, patch_id: PatchId) -> int:
        try:
            return self.patch_ids.index(patch_id)
        except ValueError:
            raise KeyError(f"unknown patch {patch_id!r}") from None


@dataclass(frozen=True)
class MatchResult:
    query: PatchId
    matches: list[PatchId]  # similarity-ranked, query first
    delta1: float
    delta2: float


def _standardize_rows(matrix: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-variance profile per row (constant rows stay zero).

    Aggregated vectors arrive on incompatible scales (1-D layout coordinates
    span roughly +-10, small-patch column-mean fallbacks sit near 1), and the
    layout scale itself varies per optimization run; clustering compares the
    standardized profiles instead.
    """
    centered = matrix - matrix.mean(axis=1, keepdims=True)
    std = centered.std(axis=1, keepdims=True)
    return np.divide(centered, std, out=np.zeros_like(centered), where=std > 1e-12)


def _dispersion_profile(rows: np.ndarray) -> np.ndarray:
    """Per-column coefficient of variation over a patch's signature rows.

    Column terms are accumulated in sorted order so row-permuted copies of a
    patch produce bit-identical profiles (the downstream stochastic layouts
    are ulp-sensitive).
    """
    ordered = np.sort(rows, axis=0)
    n = len(ordered)
    mean = ordered.sum(axis=0) / n
    var = ((ordered - mean) ** 2).sum(axis=0) / n
    return np.sqrt(var) / np.maximum(mean, 1e-300)


def patch_feature_matrix(
    record: SurfaceRecord,
    seg: PatchSegmentation,
    seed: int = 0,
    config: PipelineConfig = PipelineConfig(),
) -> np.ndarray:
    """One aggregated, row-standardized feature row per patch of a single surface."""
    if config.patch_feature == "umap_aggregate":
        rows = [
            umap_aggregate(
                record.hks.features[verts], seed=seed, n_epochs=config.umap_epochs
            ).values
            for verts in seg.patches
        ]
    else:
        rows = [_dispersion_profile(record.hks.features[verts]) for verts in seg.patches]
    return _standardize_rows(np.vstack(rows))


def embed_patches(
    segmented: list[tuple[SurfaceRecord, PatchSegmentation]],
    seed: int = 0,
    config: PipelineConfig = PipelineConfig(),
    precomputed: dict[str, np.ndarray] | None = None,
) -> PatchEmbedding:
    """Aggregate each patch's signature rows to a fixed-length feature vector.

    All aggregations share one seed so the layouts are mutually comparable;
    the 2D projection is display-only. ``precomputed`` may carry per-surface
    feature matrices (from patch_feature_matrix) to skip re-aggregation.
    """
    patch_ids: list[PatchId] = []
    blocks = []
    vertex_lists: dict[PatchId, np.ndarray] = {}
    for record, seg in segmented:
        for label, verts in enumerate(seg.patches):
            pid = (record.surface_id, label)
            patch_ids.append(pid)
            vertex_lists[pid] = verts
        if precomputed is not None and record.surface_id in precomputed:
            blocks.append(precomputed[record.surface_id])
        else:
            blocks.append(patch_feature_matrix(record, seg, seed=seed, config=config))
    if not blocks:
        raise ValueError("no patches to embed")
    features = np.vstack(blocks)
    if len(features) >= 2:
        pts = umap_embed(
            features,
            target_dim=2,
            n_neighbors=config.umap_neighbors,
            min_dist=config.umap_min_dist,
            seed=seed,
            n_epochs=config.umap_epochs,
        )
    else:
        pts = np.zeros((1, 2))
    projection = Embedding2D(points=pts, method="umap", seed=seed)
    return PatchEmbedding(
        patch_ids=patch_ids, features=features, projection=projection, vertex_lists=vertex_lists
    )


def patch_tree(embedding: PatchEmbedding, config: PipelineConfig = PipelineConfig()) -> LinkageTree:
    """Unconstrained Ward dendrogram over patch features (or the 2D view, per config)."""
    space = embedding.features if config.cluster_on == "features" else embedding.projection.points
    return ahc_ward(space)


def match_patches(
    embedding: PatchEmbedding,
    query: PatchId,
    delta2: float,
    tree: LinkageTree | None = None,
    config: PipelineConfig = PipelineConfig(),
    delta1: float = float("nan"),
) -> MatchResult:
    """Patches sharing the query's cluster at the delta2 cut, ranked by feature distance."""
    qi = embedding.index_of(query)
    if tree is None:
        tree = patch_tree(embedding, config)
    partition = cut_threshold(tree, delta2)
    members = partition.members(int(partition.labels[qi]))
    dists = np.linalg.norm(embedding.features[members] - embedding.features[qi], axis=1)
    order = np.argsort(dists, kind="stable")
    ranked = [int(members[i]) for i in order if int(members[i]) != qi]
    ordered = [qi] + ranked
    return MatchResult(
        query=query,
        matches=[embedding.patch_ids[i] for i in ordered],
        delta1=delta1,
        delta2=delta2,
    )


# ---------------------------------------------------------------------------
# Surface-level clustering


@dataclass(frozen=True)
class SurfaceEmbedding:
    surface_ids: list[str]
    features: np.ndarray
    projection: Embedding2D
    tree: LinkageTree
    clusters: Partition
    representatives: np.ndarray
    gallery: list[dict]


def surface_feature(
    record: SurfaceRecord,
    patch_matrix: np.ndarray,
    seed: int,
    config: PipelineConfig = PipelineConfig(),
) -> np.ndarray:
    """One fixed-length descriptor per surface.

    Profile mode uses the log heat trace (an eigenvalue-spectrum transform,
    stored at preprocessing time); the literal mode aggregates the surface's
    patch-feature matrix with the 1-D column embedding.
    """
    if config.patch_feature == "umap_aggregate":
        return umap_aggregate(patch_matrix, seed=seed, n_epochs=config.umap_epochs).values
    trace = record.meta.get("heat_trace")
    if trace is None:
        op = build_cotangent_laplacian(record.mesh)
        k = min(config.k, record.mesh.n_vertices - 2)
        basis = solve_eigenpairs(op, k, seed=surface_seed(config.dataset_seed, record.surface_id))
        trace = heat_trace(basis, d=config.d)
    return np.log(np.asarray(trace, dtype=np.float64))


def cluster_surfaces(
    records: list[SurfaceRecord],
    delta1_slider: float = 50.0,
    delta_s_slider: float = 50.0,
    seed: int = 0,
    config: PipelineConfig = PipelineConfig(),
    patch_features: dict[str, np.ndarray] | None = None,
) -> SurfaceEmbedding:
    """Cluster whole surfaces by aggregated patch-level features.

    ``patch_features`` may supply precomputed per-surface patch feature
    matrices (rows per patch) keyed by surface id to skip re-aggregation.
    """
    if len(records) < 2:
        raise ValueError("need at least 2 surfaces")
    feats = []
    for record in records:
        if patch_features is not None and record.surface_id in patch_features:
            matrix = patch_features[record.surface_id]
        else:
            tree = vertex_tree(record)
            seg = segment_patches(record, delta_from_slider(tree, delta1_slider), tree)
            matrix = patch_feature_matrix(record, seg, seed=seed, config=config)
        feats.append(surface_feature(record, matrix, seed=seed, config=config))
    features = _standardize_rows(np.vstack(feats))
    pts = umap_embed(
        features,
        target_dim=2,
        n_neighbors=config.umap_neighbors,
        min_dist=config.umap_min_dist,
        seed=seed,
        n_epochs=config.umap_epochs,
    )
    tree = ahc_ward(features if config.cluster_on == "features" else pts)
    clusters = cut_threshold(tree, delta_from_slider(tree, delta_s_slider))
    reps = representative(features, clusters)
    gallery = build_gallery(
        [r.surface_id for r in records], features, clusters, reps
    )
    return SurfaceEmbedding(
        surface_ids=[r.surface_id for r in records],
        features=features,
        projection=Embedding2D(points=pts, method="umap", seed=seed),
        tree=tree,
        clusters=clusters,
        representatives=reps,
        gallery=gallery,
    )


def build_gallery(
    surface_ids: list[str],
    features: np.ndarray,
    clusters: Partition,
    representatives: np.ndarray,
) -> list[dict]:
    """Cluster blocks sorted by descending size; members by distance to the representative."""
    blocks = []
    for label in range(clusters.cluster_count):
        members = clusters.members(label)
        rep = int(representatives[label])
        dists = np.linalg.norm(features[members] - features[rep], axis=1)
        order = np.argsort(dists, kind="stable")
        blocks.append(
            {
                "label": int(label),
                "representative": surface_ids[rep],
                "size": int(len(members)),
                "members": [surface_ids[int(members[i])] for i in order],
            }
        )
    blocks.sort(key=lambda b: (-b["size"], b["label"]))
    return blocks


# ---------------------------------------------------------------------------
# Quantitative evaluation


def evaluate_matching(
    store: FeatureStore,
    n_queries: int = 100,
    delta1_slider: float = 50.0,
    delta2_slider: float = 50.0,
    seed: int = 0,
    config: PipelineConfig = PipelineConfig(),
    embeddings: "dict[str, tuple[SurfaceRecord, PatchEmbedding, LinkageTree]] | None" = None,
) -> dict:
    """Metric report over random single-surface queries plus a random-pair baseline.

    For each query a surface is drawn uniformly, then one of its patches; the
    query is matched within that surface and the three point-set metrics are
    computed between the query patch and every non-self match. The baseline
    draws the same number of uniformly random patch pairs.
    """
    rng = np.random.default_rng(seed)
    ids = store.surface_ids()
    if not ids:
        raise ValueError("store has no ready surfaces")
    cache: dict[str, tuple[SurfaceRecord, PatchEmbedding, LinkageTree]] = (
        embeddings if embeddings is not None else {}
    )

    def surface_embedding(sid: str) -> tuple[SurfaceRecord, PatchEmbedding, LinkageTree]:
        if sid not in cache:
            record = store.read_surface(sid)
            vtree = vertex_tree(record)
            seg = segment_patches(record, delta_from_slider(vtree, delta1_slider), vtree)
            emb = embed_patches(
                [(record, seg)], seed=config.dataset_seed, config=config
            )
            cache[sid] = (record, emb, patch_tree(emb, config))
        return cache[sid]

    def patch_points(sid: str, label: int) -> np.ndarray:
        record, emb, _ = surface_embedding(sid)
        return record.mesh.vertices[emb.vertex_lists[(sid, label)]]

    per_query = []
    matched_vals: dict[str, list[float]] = {"hausdorff": [], "chamfer": [], "rmse": []}
    n_pairs = 0
    skipped = 0
    for _ in range(n_queries):
        sid = ids[int(rng.integers(len(ids)))]
        record, emb, ptree = surface_embedding(sid)
        n_patches = len(emb.patch_ids)
        label = int(rng.integers(n_patches))
        query: PatchId = (sid, label)
        delta2 = delta_from_slider(ptree, delta2_slider)
        result = match_patches(emb, query, delta2, tree=ptree, config=config)
        q_pts = patch_points(sid, label)
        vals: dict[str, list[float]] = {"hausdorff": [], "chamfer": [], "rmse": []}
        for other_sid, other_label in result.matches[1:]:
            try:
                pts = patch_points(other_sid, other_label)
                vals["hausdorff"].append(hausdorff(q_pts, pts))
                vals["chamfer"].append(chamfer(q_pts, pts))
                vals["rmse"].append(rmse(q_pts, pts))
            except MetricError:
                skipped += 1
                continue
            n_pairs += 1
        for key in matched_vals:
            matched_vals[key].extend(vals[key])
        per_query.append(
            {
                "surface": sid,
                "patch": label,
                "n_matches": len(result.matches),
                **{
                    f"{key}_mean": float(np.mean(vals[key])) if vals[key] else 0.0
                    for key in vals
                },
            }
        )

    baseline_vals: dict[str, list[float]] = {"hausdorff": [], "chamfer": [], "rmse": []}
    draws = 0
    while draws < n_pairs and len(ids) >= 1:
        sid_a = ids[int(rng.integers(len(ids)))]
        sid_b = ids[int(rng.integers(len(ids)))]
        _, emb_a, _ = surface_embedding(sid_a)
        _, emb_b, _ = surface_embedding(sid_b)
        pa = int(rng.integers(len(emb_a.patch_ids)))
        pb = int(rng.integers(len(emb_b.patch_ids)))
        if sid_a == sid_b and pa == pb:
            continue
        try:
            A = patch_points(sid_a, pa)
            B = patch_points(sid_b, pb)
            baseline_vals["hausdorff"].append(hausdorff(A, B))
            baseline_vals["chamfer"].append(chamfer(A, B))
            baseline_vals["rmse"].append(rmse(A, B))
        except MetricError:
            pass
        draws += 1

    def stats(values: list[float]) -> dict:
        if not values:
            return {"mean": 0.0, "std": 0.0, "count": 0}
        arr = np.asarray(values)
        return {"mean": float(arr.mean()), "std": float(arr.std()), "count": len(values)}

    return {
        "config": {
            "n_queries": n_queries,
            "delta1": delta1_slider,
            "delta2": delta2_slider,
            "seed": seed,
            "dataset": store.dataset_id,
        },
        "per_query": per_query,
        "summary": {
            **{key: stats(vals) for key, vals in matched_vals.items()},
            "baseline": {key: stats(vals) for key, vals in baseline_vals.items()},
            "skipped_pairs": skipped,
        },
    }
