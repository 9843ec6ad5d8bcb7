"""Triangle mesh container, OBJ I/O, normalization and connectivity queries."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Invalid mesh data or unusable mesh operation input."""


@dataclass(frozen=True)
class Mesh:
    """Indexed triangle mesh.

    vertices : (n, 3) float64 positions
    faces    : (m, 3) int64 vertex indices, three distinct indices per face
    name     : optional label carried through the pipeline
    """

    vertices: np.ndarray
    faces: np.ndarray
    name: str | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.size == 0:
            v = v.reshape(0, 3)
        if f.size == 0:
            f = f.reshape(0, 3)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must be (m, 3), got {f.shape}")
        if f.size:
            if f.min() < 0 or f.max() >= len(v):
                raise MeshError("face index out of range")
            degen = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            if degen.any():
                raise MeshError(f"{int(degen.sum())} degenerate face(s)")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def compact(self) -> "Mesh":
        """Drop unreferenced vertices and reindex faces."""
        if self.n_faces == 0:
            return Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), self.name)
        used = np.unique(self.faces)
        remap = np.full(self.n_vertices, -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        return Mesh(self.vertices[used], remap[self.faces], self.name)

    def face_areas(self) -> np.ndarray:
        a = self.vertices[self.faces[:, 0]]
        b = self.vertices[self.faces[:, 1]]
        c = self.vertices[self.faces[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def vertex_normals(self) -> np.ndarray:
        """Area-weighted vertex normals (orientation as authored, zero-safe)."""
        v, f = self.vertices, self.faces
        fn = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        out = np.zeros_like(v)
        for k in range(3):
            np.add.at(out, f[:, k], fn)
        norms = np.linalg.norm(out, axis=1)
        norms[norms < 1e-300] = 1.0
        return out / norms[:, None]


@dataclass(frozen=True)
class Transform:
    """Centroid/scale normalization record: normalized = (p - translation) / scale."""

    translation: np.ndarray
    scale: float

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.translation) / self.scale

    def invert(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) * self.scale + self.translation


@dataclass
class AdjacencyGraph:
    """Undirected vertex adjacency from shared face edges."""

    neighbors: list[np.ndarray]
    edges: np.ndarray = field(repr=False)  # (e, 2) with i < j

    @property
    def n_vertices(self) -> int:
        return len(self.neighbors)


def load_obj(path: str | Path) -> Mesh:
    """Parse an ASCII OBJ file (``v`` and ``f`` records, fan-triangulated).

    1-based indices are converted to 0-based; negative indices resolve
    relative to the vertices read so far. Degenerate face records (repeated
    vertex) are dropped with a single counted warning.
    """
    path = Path(path)
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    dropped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path.name}:{lineno}: malformed vertex record")
                try:
                    vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError as exc:
                    raise MeshError(f"{path.name}:{lineno}: {exc}") from exc
            elif tag == "f":
                idx = []
                for tok in parts[1:]:
                    head = tok.split("/", 1)[0]
                    try:
                        i = int(head)
                    except ValueError as exc:
                        raise MeshError(f"{path.name}:{lineno}: bad face index {tok!r}") from exc
                    if i < 0:
                        i = len(vertices) + i
                    else:
                        i = i - 1
                    if i < 0 or i >= len(vertices):
                        raise MeshError(f"{path.name}:{lineno}: face index {tok} out of range")
                    idx.append(i)
                if len(idx) < 3:
                    raise MeshError(f"{path.name}:{lineno}: face with fewer than 3 vertices")
                for k in range(1, len(idx) - 1):
                    tri = (idx[0], idx[k], idx[k + 1])
                    if len(set(tri)) < 3:
                        dropped += 1
                    else:
                        faces.append(tri)
            # other records (vn, vt, o, g, usemtl, ...) carry no geometry we keep
    if dropped:
        warnings.warn(f"{path.name}: dropped {dropped} degenerate face(s)", stacklevel=2)
    return Mesh(
        np.array(vertices, dtype=np.float64).reshape(-1, 3),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
        name=path.stem,
    )


def save_obj(mesh: Mesh, path: str | Path) -> None:
    """Write an ASCII OBJ at full precision (bit round-trips through load_obj)."""
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for a, b, c in mesh.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


def normalize_unit_box(mesh: Mesh) -> tuple[Mesh, Transform]:
    """Center the vertex centroid at the origin and scale the bounding-box diagonal to 1."""
    if mesh.n_vertices == 0:
        raise MeshError("cannot normalize empty mesh")
    centroid = mesh.vertices.mean(axis=0)
    extent = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
    diag = float(np.linalg.norm(extent))
    if diag < 1e-300:
        raise MeshError("zero extent")
    tf = Transform(translation=centroid, scale=diag)
    return Mesh(tf.apply(mesh.vertices), mesh.faces, mesh.name), tf


def adjacency(mesh: Mesh) -> AdjacencyGraph:
    """Symmetric neighbor lists; (i, j) is an edge iff some face contains both."""
    n = mesh.n_vertices
    if mesh.n_faces == 0:
        return AdjacencyGraph([np.array([], dtype=np.int64)] * n, np.zeros((0, 2), dtype=np.int64))
    f = mesh.faces
    pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    pairs = np.sort(pairs, axis=1)
    edges = np.unique(pairs, axis=0)
    both = np.concatenate([edges, edges[:, ::-1]])
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=n)
    splits = np.cumsum(counts)[:-1]
    neighbors = np.split(both[:, 1], splits)
    return AdjacencyGraph([np.ascontiguousarray(nb) for nb in neighbors], edges)


def connected_components(graph: AdjacencyGraph) -> np.ndarray:
    """Label vertices 0..C-1 by path-connectivity (labels ordered by first vertex)."""
    n = graph.n_vertices
    labels = np.full(n, -1, dtype=np.int64)
    current = 0
    for start in range(n):
        if labels[start] != -1:
            continue
        stack = [start]
        labels[start] = current
        while stack:
            u = stack.pop()
            for w in graph.neighbors[u]:
                if labels[w] == -1:
                    labels[w] = current
                    stack.append(int(w))
        current += 1
    return labels


def boundary_edges(mesh: Mesh) -> np.ndarray:
    """Edges incident to exactly one face, as (e, 2) sorted index pairs."""
    f = mesh.faces
    if len(f) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    pairs = np.sort(pairs, axis=1)
    uniq, counts = np.unique(pairs, axis=0, return_counts=True)
    return uniq[counts == 1]
