"""Directory-backed catalog of preprocessed surfaces with content checksums."""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from surfpatch.embedding import Embedding2D
from surfpatch.mesh import Mesh, load_obj, save_obj
from surfpatch.spectral import HksMatrix, load_hks, save_hks

STORE_VERSION = 1
PROJECTION_MAGIC = b"PRJ1"


class StoreError(RuntimeError):
    """Missing files, checksum mismatches, or version conflicts."""


@dataclass(frozen=True)
class SurfaceRecord:
    """One preprocessed surface: simplified mesh, signatures, 2D vertex projection."""

    surface_id: str
    mesh: Mesh
    hks: HksMatrix
    vertex_projection: Embedding2D
    meta: dict

    def __post_init__(self):
        n = self.mesh.n_vertices
        if self.hks.n != n or len(self.vertex_projection.points) != n:
            raise ValueError(
                f"{self.surface_id}: mesh/hks/projection sizes differ "
                f"({n}, {self.hks.n}, {len(self.vertex_projection.points)})"
            )


def save_projection(points: np.ndarray, path: Path) -> None:
    points = np.ascontiguousarray(points, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(PROJECTION_MAGIC)
        fh.write(struct.pack("<I", len(points)))
        fh.write(points.tobytes())


def load_projection(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != PROJECTION_MAGIC:
            raise StoreError(f"{path}: not a projection file (magic {magic!r})")
        (n,) = struct.unpack("<I", fh.read(4))
        return np.frombuffer(fh.read(16 * n), dtype="<f8").reshape(n, 2).copy()


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class FeatureStore:
    """On-disk store: manifest.json plus per-surface mesh/hks/projection/meta files.

    Surfaces are write-once; the manifest lists every entry with per-file
    sha256 digests, verified on read.
    """

    SURFACE_FILES = ("mesh.obj", "hks.bin", "vproj.bin", "meta.json")

    def __init__(self, root: Path, manifest: dict):
        self.root = Path(root)
        self.manifest = manifest

    # -- lifecycle

    @classmethod
    def create(
        cls,
        root: str | Path,
        dataset_id: str,
        dataset_seed: int,
        d: int,
        k: int,
        epsilon: float,
        field_kind: str = "external",
    ) -> "FeatureStore":
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        manifest = {
            "version": STORE_VERSION,
            "dataset_id": dataset_id,
            "field": field_kind,
            "dataset_seed": dataset_seed,
            "d": d,
            "k": k,
            "epsilon": epsilon,
            "surfaces": [],
        }
        store = cls(root, manifest)
        store._write_manifest()
        return store

    @classmethod
    def open(cls, root: str | Path) -> "FeatureStore":
        root = Path(root)
        manifest_path = root / "manifest.json"
        if not manifest_path.exists():
            raise StoreError(f"no manifest at {manifest_path}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("version") != STORE_VERSION:
            raise StoreError(
                f"store version {manifest.get('version')!r} unsupported (expected {STORE_VERSION})"
            )
        return cls(root, manifest)

    def _write_manifest(self) -> None:
        tmp = self.root / "manifest.json.tmp"
        tmp.write_text(json.dumps(self.manifest, indent=1, sort_keys=True), encoding="utf-8")
        tmp.replace(self.root / "manifest.json")

    # -- surface access

    @property
    def dataset_id(self) -> str:
        return self.manifest["dataset_id"]

    def surface_ids(self, status: str = "ready") -> list[str]:
        return [e["id"] for e in self.manifest["surfaces"] if e["status"] == status]

    def entry(self, surface_id: str) -> dict:
        for e in self.manifest["surfaces"]:
            if e["id"] == surface_id:
                return e
        raise StoreError(f"unknown surface {surface_id!r}")

    def has_surface(self, surface_id: str) -> bool:
        return any(e["id"] == surface_id for e in self.manifest["surfaces"])

    def add_surface(self, record: SurfaceRecord) -> None:
        if self.has_surface(record.surface_id):
            raise StoreError(f"surface {record.surface_id!r} already stored")
        sdir = self.root / record.surface_id
        sdir.mkdir(parents=True, exist_ok=True)
        save_obj(record.mesh, sdir / "mesh.obj")
        save_hks(record.hks, sdir / "hks.bin")
        save_projection(record.vertex_projection.points, sdir / "vproj.bin")
        meta = dict(record.meta)
        meta["projection"] = {
            "method": record.vertex_projection.method,
            "seed": record.vertex_projection.seed,
        }
        (sdir / "meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True), encoding="utf-8")
        files = {name: f"{record.surface_id}/{name}" for name in self.SURFACE_FILES}
        shas = {name: _sha256(sdir / name) for name in self.SURFACE_FILES}
        self.manifest["surfaces"].append(
            {"id": record.surface_id, "status": "ready", "files": files, "sha256": shas}
        )
        self._write_manifest()

    def add_failure(self, surface_id: str, error: str) -> None:
        if self.has_surface(surface_id):
            raise StoreError(f"surface {surface_id!r} already stored")
        self.manifest["surfaces"].append({"id": surface_id, "status": "failed", "error": error})
        self._write_manifest()

    def read_surface(self, surface_id: str) -> SurfaceRecord:
        entry = self.entry(surface_id)
        if entry["status"] != "ready":
            raise StoreError(f"surface {surface_id!r} has status {entry['status']!r}")
        sdir = self.root / surface_id
        for name, rel in entry["files"].items():
            path = self.root / rel
            if not path.exists():
                raise StoreError(f"missing file {rel}")
            if _sha256(path) != entry["sha256"][name]:
                raise StoreError(f"checksum mismatch for {rel}")
        mesh = load_obj(sdir / "mesh.obj")
        hks = load_hks(sdir / "hks.bin")
        points = load_projection(sdir / "vproj.bin")
        meta = json.loads((sdir / "meta.json").read_text(encoding="utf-8"))
        proj_info = meta.get("projection", {})
        projection = Embedding2D(
            points=points,
            method=proj_info.get("method", "tsne"),
            seed=proj_info.get("seed", 0),
        )
        return SurfaceRecord(
            surface_id=surface_id,
            mesh=Mesh(mesh.vertices, mesh.faces, name=surface_id),
            hks=hks,
            vertex_projection=projection,
            meta=meta,
        )

    # -- dataset-level artifacts

    def write_clusters(self, payload: dict) -> None:
        path = self.root / "clusters.json"
        path.write_text(json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")

    def read_clusters(self) -> dict | None:
        path = self.root / "clusters.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def checksum(self) -> str:
        """Digest over the manifest and every listed surface file."""
        digest = hashlib.sha256()
        digest.update((self.root / "manifest.json").read_bytes())
        for entry in sorted(self.manifest["surfaces"], key=lambda e: e["id"]):
            if entry["status"] != "ready":
                continue
            for name in sorted(entry["files"]):
                digest.update((self.root / entry["files"][name]).read_bytes())
        return digest.hexdigest()
