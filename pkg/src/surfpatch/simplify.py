"""Quadric-error edge-collapse simplification with boundary constraints."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from surfpatch.mesh import Mesh, MeshError, boundary_edges, normalize_unit_box

BOUNDARY_WEIGHT = 1e3
COND_LIMIT = 1e8


@dataclass(frozen=True)
class SimplifyParams:
    """Collapse budget: epsilon is the maximum permitted quadric cost per collapse
    on a mesh pre-normalized to unit bounding-box diagonal."""

    epsilon: float = 0.5
    min_vertices: int = 4

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.min_vertices < 4:
            raise ValueError("min_vertices must be >= 4")


def _plane_quadric(normal: np.ndarray, point: np.ndarray) -> np.ndarray:
    d = -float(normal @ point)
    p = np.array([normal[0], normal[1], normal[2], d])
    return np.outer(p, p)


def _quadric_cost(Q: np.ndarray, v: np.ndarray) -> float:
    h = np.array([v[0], v[1], v[2], 1.0])
    return float(h @ Q @ h)


def _optimal_position(Q: np.ndarray) -> np.ndarray | None:
    A = Q[:3, :3]
    b = Q[:3, 3]
    w = np.linalg.eigvalsh(A)
    if w[0] <= 0 or w[-1] / max(w[0], 1e-300) > COND_LIMIT:
        return None
    return np.linalg.solve(A, -b)


def simplify_qem(mesh: Mesh, params: SimplifyParams) -> Mesh:
    """Iterative minimum-cost edge collapse.

    The mesh is normalized to the unit bounding box first (the returned mesh is
    in normalized coordinates). Collapses stop when the cheapest candidate costs
    more than ``params.epsilon`` or the vertex count reaches
    ``params.min_vertices``. Collapses that flip any incident face normal by
    more than 90 degrees or crush a face to zero area are rejected; edges shared
    by more than two faces are never collapsed.
    """
    mesh, _ = normalize_unit_box(mesh)
    n = mesh.n_vertices
    if mesh.n_faces == 0 or n <= params.min_vertices:
        return mesh

    pos = mesh.vertices.copy()
    faces = mesh.faces.copy()
    face_alive = np.ones(len(faces), dtype=bool)
    vertex_faces: list[set[int]] = [set() for _ in range(n)]
    for fi, (a, b, c) in enumerate(faces):
        vertex_faces[a].add(fi)
        vertex_faces[b].add(fi)
        vertex_faces[c].add(fi)

    quadrics = np.zeros((n, 4, 4))
    fa = pos[faces[:, 0]]
    fb = pos[faces[:, 1]]
    fc = pos[faces[:, 2]]
    raw_normals = np.cross(fb - fa, fc - fa)
    lengths = np.linalg.norm(raw_normals, axis=1)
    for fi in range(len(faces)):
        if lengths[fi] < 1e-300:
            continue
        K = _plane_quadric(raw_normals[fi] / lengths[fi], fa[fi])
        for v in faces[fi]:
            quadrics[v] += K

    # Open boundaries get a stiff constraint plane through each boundary edge,
    # perpendicular to its face, so collapses slide along the rim instead of
    # eroding it.
    edge_to_face: dict[tuple[int, int], int] = {}
    for fi, (a, b, c) in enumerate(faces):
        for i, j in ((a, b), (b, c), (c, a)):
            edge_to_face[(min(i, j), max(i, j))] = fi
    for i, j in boundary_edges(mesh):
        fi = edge_to_face[(int(i), int(j))]
        if lengths[fi] < 1e-300:
            continue
        edge_dir = pos[j] - pos[i]
        constraint = np.cross(edge_dir, raw_normals[fi] / lengths[fi])
        norm = np.linalg.norm(constraint)
        if norm < 1e-300:
            continue
        K = BOUNDARY_WEIGHT * _plane_quadric(constraint / norm, pos[i])
        quadrics[i] += K
        quadrics[j] += K

    alive = np.ones(n, dtype=bool)
    version = np.zeros(n, dtype=np.int64)
    n_alive = n

    def vertex_neighbors(i: int) -> set[int]:
        out: set[int] = set()
        for fi in vertex_faces[i]:
            out.update(int(v) for v in faces[fi])
        out.discard(i)
        return out

    def shared_faces(i: int, j: int) -> list[int]:
        return [fi for fi in vertex_faces[i] & vertex_faces[j]]

    def candidate(i: int, j: int) -> tuple[float, np.ndarray] | None:
        if len(shared_faces(i, j)) > 2:  # non-manifold edge: skip
            return None
        Q = quadrics[i] + quadrics[j]
        best_pos = _optimal_position(Q)
        if best_pos is None:
            options = [pos[i], pos[j], 0.5 * (pos[i] + pos[j])]
            costs = [_quadric_cost(Q, p) for p in options]
            k = int(np.argmin(costs))
            return costs[k], options[k]
        return _quadric_cost(Q, best_pos), best_pos

    def flips_normal(i: int, j: int, target: np.ndarray) -> bool:
        doomed = set(shared_faces(i, j))
        for fi in (vertex_faces[i] | vertex_faces[j]) - doomed:
            tri = faces[fi]
            old = np.cross(pos[tri[1]] - pos[tri[0]], pos[tri[2]] - pos[tri[0]])
            moved = [target if v in (i, j) else pos[v] for v in tri]
            new = np.cross(moved[1] - moved[0], moved[2] - moved[0])
            area2 = np.linalg.norm(new)
            if area2 < 1e-14 or float(old @ new) <= 0.0:
                return True
            # needle guard: slivers poison downstream cotangent weights
            longest_sq = max(
                float((moved[1] - moved[0]) @ (moved[1] - moved[0])),
                float((moved[2] - moved[1]) @ (moved[2] - moved[1])),
                float((moved[0] - moved[2]) @ (moved[0] - moved[2])),
            )
            if area2 < 0.02 * longest_sq:
                return True
        return False

    heap: list[tuple[float, int, int, int, int]] = []

    def push_edge(i: int, j: int) -> None:
        a, b = (i, j) if i < j else (j, i)
        cand = candidate(a, b)
        if cand is None:
            return
        heapq.heappush(heap, (cand[0], a, b, int(version[a]), int(version[b])))

    seen: set[tuple[int, int]] = set()
    for i in range(n):
        for j in vertex_neighbors(i):
            key = (min(i, j), max(i, j))
            if key not in seen:
                seen.add(key)
                push_edge(*key)

    while heap and n_alive > params.min_vertices:
        cost, i, j, vi, vj = heapq.heappop(heap)
        if not (alive[i] and alive[j]) or version[i] != vi or version[j] != vj:
            continue
        if not shared_faces(i, j):  # edge dissolved by earlier collapses
            continue
        if cost > params.epsilon:
            break
        cand = candidate(i, j)
        if cand is None:
            continue
        cost, target = cand
        if cost > params.epsilon or flips_normal(i, j, target):
            continue

        # Collapse j into i at the target position.
        pos[i] = target
        quadrics[i] = quadrics[i] + quadrics[j]
        for fi in list(shared_faces(i, j)):
            face_alive[fi] = False
            for v in faces[fi]:
                vertex_faces[v].discard(fi)
        for fi in list(vertex_faces[j]):
            tri = faces[fi]
            faces[fi] = [i if v == j else v for v in tri]
            vertex_faces[j].discard(fi)
            vertex_faces[i].add(fi)
            if len(set(int(v) for v in faces[fi])) < 3:
                face_alive[fi] = False
                for v in faces[fi]:
                    vertex_faces[v].discard(fi)
        alive[j] = False
        version[i] += 1
        version[j] += 1
        n_alive -= 1
        for nb in vertex_neighbors(i):
            push_edge(i, nb)

    keep_faces = faces[face_alive]
    result = Mesh(pos, keep_faces, mesh.name)
    return result.compact()
