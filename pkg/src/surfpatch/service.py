"""HTTP JSON query service over one or more feature stores."""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from surfpatch.hierarchy import LinkageTree
from surfpatch.pipeline import (
    PatchEmbedding,
    PipelineConfig,
    delta_from_slider,
    embed_patches,
    match_patches,
    patch_feature_matrix,
    patch_tree,
    segment_patches,
    vertex_tree,
)
from surfpatch.store import FeatureStore, StoreError, SurfaceRecord


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _qualify(dataset_id: str, surface_id: str) -> str:
    return f"{dataset_id}:{surface_id}"


class ServiceState:
    """Read-only store access plus keyed caches for interactive queries.

    Joint patch embeddings are cached per (surface set, delta1); a per-key lock
    coalesces concurrent identical computations. Per-surface patch features are
    selection-independent, so they are cached once per (surface, delta1).
    """

    def __init__(self, stores: list[FeatureStore], config: PipelineConfig | None = None):
        self.stores: dict[str, FeatureStore] = {}
        for store in stores:
            ds = store.dataset_id
            if ds in self.stores:
                raise ValueError(f"duplicate dataset id {ds!r}")
            self.stores[ds] = store
        self.config = config or PipelineConfig()
        self._records: dict[str, SurfaceRecord] = {}
        self._vtrees: dict[str, LinkageTree] = {}
        self._segmentations: dict[tuple[str, float], object] = {}
        self._features: dict[tuple[str, float], object] = {}
        self._joint: dict[tuple, tuple[PatchEmbedding, LinkageTree]] = {}
        self._locks: dict[tuple, threading.Lock] = {}
        self._mutex = threading.Lock()

    # -- id resolution

    def resolve(self, qualified_id: str) -> tuple[str, str]:
        if ":" not in qualified_id:
            raise ApiError(404, f"unknown surface {qualified_id!r} (expected dataset:surface)")
        ds, sid = qualified_id.split(":", 1)
        store = self.stores.get(ds)
        if store is None:
            raise ApiError(404, f"unknown dataset {ds!r}")
        try:
            entry = store.entry(sid)
        except StoreError:
            raise ApiError(404, f"unknown surface {sid!r} in dataset {ds!r}") from None
        if entry["status"] != "ready":
            raise ApiError(404, f"surface {sid!r} is not ready (status {entry['status']})")
        return ds, sid

    def record(self, ds: str, sid: str) -> SurfaceRecord:
        key = _qualify(ds, sid)
        if key not in self._records:
            self._records[key] = self.stores[ds].read_surface(sid)
        return self._records[key]

    def vtree(self, ds: str, sid: str) -> LinkageTree:
        key = _qualify(ds, sid)
        if key not in self._vtrees:
            self._vtrees[key] = vertex_tree(self.record(ds, sid))
        return self._vtrees[key]

    def segmentation(self, ds: str, sid: str, delta1: float):
        key = (_qualify(ds, sid), delta1)
        if key not in self._segmentations:
            record = self.record(ds, sid)
            tree = self.vtree(ds, sid)
            self._segmentations[key] = segment_patches(
                record, delta_from_slider(tree, delta1), tree
            )
        return self._segmentations[key]

    def features(self, ds: str, sid: str, delta1: float):
        """Per-surface patch feature matrix; selection-independent, cached."""
        key = (_qualify(ds, sid), delta1)
        if key not in self._features:
            self._features[key] = patch_feature_matrix(
                self.record(ds, sid),
                self.segmentation(ds, sid, delta1),
                seed=self.config.dataset_seed,
                config=self.config,
            )
        return self._features[key]

    def joint_embedding(
        self, ds: str, sids: tuple[str, ...], delta1: float
    ) -> tuple[PatchEmbedding, LinkageTree]:
        key = (ds, sids, delta1)
        with self._mutex:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key not in self._joint:
                segmented = [
                    (self.record(ds, sid), self.segmentation(ds, sid, delta1)) for sid in sids
                ]
                precomputed = {sid: self.features(ds, sid, delta1) for sid in sids}
                emb = embed_patches(
                    segmented,
                    seed=self.config.dataset_seed,
                    config=self.config,
                    precomputed=precomputed,
                )
                self._joint[key] = (emb, patch_tree(emb, self.config))
            return self._joint[key]


def _check_slider(value, name: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ApiError(400, f"{name} must be a number") from None
    if not 0.0 <= x <= 100.0:
        raise ApiError(422, f"{name}={x} outside [0, 100]")
    return x


def create_app(
    stores: list[FeatureStore],
    config: PipelineConfig | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    state = ServiceState(stores, config)
    app = FastAPI(title="surfpatch", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.get("/health")
    def health():
        return PlainTextResponse("ok")

    @app.get("/datasets")
    def datasets():
        out = []
        for ds, store in state.stores.items():
            entries = store.manifest["surfaces"]
            n_ready = sum(1 for e in entries if e["status"] == "ready")
            n_failed = sum(1 for e in entries if e["status"] == "failed")
            status = "ready" if n_ready and not n_failed else ("failed" if not n_ready else "ready")
            out.append(
                {
                    "id": ds,
                    "field": store.manifest.get("field", "external"),
                    "surface_count": n_ready,
                    "failed_count": n_failed,
                    "clustered": store.read_clusters() is not None,
                    "status": status,
                }
            )
        return {"datasets": out}

    def _clusters_or_409(ds: str) -> dict:
        store = state.stores.get(ds)
        if store is None:
            raise ApiError(404, f"unknown dataset {ds!r}")
        clusters = store.read_clusters()
        if clusters is None:
            raise ApiError(409, f"dataset {ds!r} is not clustered; run the cluster command")
        return clusters

    @app.get("/datasets/{ds}/surfaces")
    def gallery(ds: str, order: str = "gallery"):
        if order != "gallery":
            raise ApiError(400, f"unsupported order {order!r}")
        clusters = _clusters_or_409(ds)
        blocks = [
            {
                "label": b["label"],
                "representative": _qualify(ds, b["representative"]),
                "size": b["size"],
                "members": [_qualify(ds, m) for m in b["members"]],
            }
            for b in clusters["gallery"]
        ]
        return {"dataset": ds, "clusters": blocks}

    @app.get("/datasets/{ds}/projection")
    def projection(ds: str):
        clusters = _clusters_or_409(ds)
        return {
            "dataset": ds,
            "surfaces": [_qualify(ds, sid) for sid in clusters["surface_ids"]],
            "points": clusters["points"],
            "labels": clusters["labels"],
        }

    @app.get("/surfaces/{qid}/mesh")
    def mesh(qid: str):
        ds, sid = state.resolve(qid)
        record = state.record(ds, sid)
        return {
            "surface": qid,
            "vertices": record.mesh.vertices.tolist(),
            "faces": record.mesh.faces.tolist(),
            "normals": record.mesh.vertex_normals().tolist(),
        }

    @app.get("/surfaces/{qid}/patches")
    def patches(qid: str, delta1: float = 50.0):
        d1 = _check_slider(delta1, "delta1")
        ds, sid = state.resolve(qid)
        seg = state.segmentation(ds, sid, d1)
        emb, _ = state.joint_embedding(ds, (sid,), d1)
        return {
            "surface": qid,
            "delta1": d1,
            "patch_count": seg.n_patches,
            "patches": [
                {"id": label, "vertices": verts.tolist()}
                for label, verts in enumerate(seg.patches)
            ],
            "projection": emb.projection.points.tolist(),
        }

    @app.post("/match")
    async def match(request: Request):
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "malformed JSON body") from None
        if not isinstance(body, dict):
            raise ApiError(400, "body must be a JSON object")
        ds = body.get("dataset")
        if not isinstance(ds, str) or ds not in state.stores:
            raise ApiError(404, f"unknown dataset {ds!r}")
        query = body.get("query")
        if not isinstance(query, dict) or "surface_id" not in query or "patch_id" not in query:
            raise ApiError(400, "query must carry surface_id and patch_id")
        d1 = _check_slider(body.get("delta1", 50.0), "delta1")
        d2 = _check_slider(body.get("delta2", 50.0), "delta2")
        raw_ids = body.get("surface_ids")
        if not isinstance(raw_ids, list) or not raw_ids:
            raise ApiError(400, "surface_ids must be a non-empty list")

        def local(sid_raw) -> str:
            if not isinstance(sid_raw, str):
                raise ApiError(400, "surface ids must be strings")
            sid = sid_raw.split(":", 1)[1] if ":" in sid_raw else sid_raw
            state.resolve(_qualify(ds, sid))
            return sid

        sids = tuple(local(s) for s in raw_ids)
        q_sid = local(query["surface_id"])
        if q_sid not in sids:
            raise ApiError(400, "query surface must be in surface_ids")
        if not isinstance(query["patch_id"], int):
            raise ApiError(400, "query patch_id must be an integer")

        emb, tree = state.joint_embedding(ds, sids, d1)
        q_patch = (q_sid, query["patch_id"])
        try:
            emb.index_of(q_patch)
        except KeyError:
            raise ApiError(404, f"unknown patch {query['patch_id']} on {q_sid!r}") from None
        result = match_patches(
            emb, q_patch, delta_from_slider(tree, d2), tree=tree, config=state.config, delta1=d1
        )
        return {
            "query": {"surface_id": _qualify(ds, q_sid), "patch_id": query["patch_id"]},
            "delta1": d1,
            "delta2": d2,
            "matches": [
                {
                    "surface_id": _qualify(ds, sid),
                    "patch_id": pid,
                    "rank": rank,
                    "vertices": emb.vertex_lists[(sid, pid)].tolist(),
                }
                for rank, (sid, pid) in enumerate(result.matches)
            ],
        }

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
