"""Procedural test geometry: icospheres, grids, and perturbed spheres."""

from __future__ import annotations

import numpy as np

from surfpatch.mesh import Mesh


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> Mesh:
    """Geodesic sphere from a subdivided icosahedron (2562 vertices at level 4)."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    for _ in range(subdivisions):
        verts_list = list(verts)
        midpoint: dict[tuple[int, int], int] = {}

        def mid(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            if key not in midpoint:
                p = verts_list[i] + verts_list[j]
                p = p / np.linalg.norm(p)
                midpoint[key] = len(verts_list)
                verts_list.append(p)
            return midpoint[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        verts = np.array(verts_list)
        faces = np.array(new_faces, dtype=np.int64)
    return Mesh(verts * radius, faces, name=f"icosphere{subdivisions}")


def grid_mesh(nx: int = 20, ny: int = 20, width: float = 1.0, height: float = 1.0) -> Mesh:
    """Flat triangulated rectangle in the z=0 plane with (nx+1)*(ny+1) vertices."""
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
    faces = []
    for i in range(nx):
        for j in range(ny):
            v00 = i * (ny + 1) + j
            v01 = v00 + 1
            v10 = v00 + (ny + 1)
            v11 = v10 + 1
            faces.append((v00, v10, v11))
            faces.append((v00, v11, v01))
    return Mesh(verts, np.array(faces, dtype=np.int64), name=f"grid{nx}x{ny}")


def spiked_sphere(subdivisions: int = 3, spike_height: float = 0.8) -> tuple[Mesh, int]:
    """Icosphere with one vertex pulled radially outward; returns (mesh, spike index)."""
    base = icosphere(subdivisions)
    verts = base.vertices.copy()
    spike = 0
    verts[spike] = verts[spike] * (1.0 + spike_height)
    return Mesh(verts, base.faces, name="spiked_sphere"), spike
