"""Agglomerative Ward clustering with optional adjacency constraints, cuts, and representatives."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from surfpatch.mesh import AdjacencyGraph


@dataclass(frozen=True)
class LinkageTree:
    """Ward merge dendrogram.

    merges : (n_merges, 4) float array [id_a, id_b, distance, new_size].
    Leaves are 0..leaf_count-1; merge i creates cluster leaf_count+i.
    Recorded distances are non-decreasing; merges forced across disconnected
    constraint components carry distance +inf.
    """

    merges: np.ndarray
    leaf_count: int

    @property
    def n_finite(self) -> int:
        return int(np.isfinite(self.merges[:, 2]).sum()) if len(self.merges) else 0

    def max_finite_distance(self) -> float:
        if self.n_finite == 0:
            return 0.0
        return float(self.merges[self.n_finite - 1, 2])


@dataclass(frozen=True)
class Partition:
    """Dense cluster labels 0..cluster_count-1, ordered by smallest member index."""

    labels: np.ndarray
    cluster_count: int

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


def _ward_distance(size_a, size_b, centroid_a, centroid_b) -> float:
    diff = centroid_a - centroid_b
    return math.sqrt(2.0 * size_a * size_b / (size_a + size_b) * float(diff @ diff))


def ahc_ward(points: np.ndarray, constraints: AdjacencyGraph | None = None) -> LinkageTree:
    """Bottom-up Ward linkage over row vectors.

    With ``constraints``, only cluster pairs joined by at least one original
    graph edge may merge; once no constrained pair remains (disconnected
    graph), surviving roots are merged at distance +inf so threshold cuts
    leave one cluster per component. Ties break on the smallest (id_a, id_b).
    Recorded merge distances are monotone non-decreasing.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"points must be 2-D, got shape {points.shape}")
    m = len(points)
    if m == 0:
        raise ValueError("need at least one point")
    if constraints is not None and constraints.n_vertices != m:
        raise ValueError(
            f"constraint graph has {constraints.n_vertices} vertices for {m} points"
        )

    total = 2 * m - 1
    centroids = np.zeros((total, points.shape[1]))
    centroids[:m] = points
    sizes = np.zeros(total, dtype=np.int64)
    sizes[:m] = 1
    live: set[int] = set(range(m))
    neighbors: list[set[int]] | None = None

    heap: list[tuple[float, int, int]] = []
    if constraints is not None:
        neighbors = [set(int(v) for v in nb) for nb in constraints.neighbors]
        neighbors.extend(set() for _ in range(m - 1))
        for a, b in constraints.edges:
            a, b = int(a), int(b)
            heap.append((_ward_distance(1, 1, points[a], points[b]), a, b))
    else:
        diff = points[:, None, :] - points[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        iu, ju = np.triu_indices(m, k=1)
        heap = list(zip(dist[iu, ju].tolist(), iu.tolist(), ju.tolist()))
    heapq.heapify(heap)

    merges = np.zeros((m - 1, 4))
    n_merges = 0
    last_recorded = 0.0
    next_id = m

    while len(live) > 1:
        entry = None
        while heap:
            d, a, b = heapq.heappop(heap)
            if a in live and b in live:
                entry = (d, a, b)
                break
        if entry is None:
            # Disconnected constraint graph: chain remaining roots at +inf.
            rest = sorted(live)
            a, b = rest[0], rest[1]
            d = math.inf
        else:
            d, a, b = entry

        c = next_id
        next_id += 1
        sizes[c] = sizes[a] + sizes[b]
        centroids[c] = (sizes[a] * centroids[a] + sizes[b] * centroids[b]) / sizes[c]
        live.discard(a)
        live.discard(b)
        live.add(c)
        last_recorded = max(last_recorded, d)
        merges[n_merges] = (a, b, last_recorded, sizes[c])
        n_merges += 1

        if neighbors is not None:
            merged_nb = (neighbors[a] | neighbors[b]) - {a, b}
            neighbors[c] = merged_nb
            for k in merged_nb:
                neighbors[k].discard(a)
                neighbors[k].discard(b)
                neighbors[k].add(c)
                heapq.heappush(
                    heap, (_ward_distance(sizes[k], sizes[c], centroids[k], centroids[c]), k, c)
                )
        else:
            for k in live:
                if k == c:
                    continue
                heapq.heappush(
                    heap, (_ward_distance(sizes[k], sizes[c], centroids[k], centroids[c]), k, c)
                )

    return LinkageTree(merges=merges, leaf_count=m)


def _replay(tree: LinkageTree, n_apply: int) -> Partition:
    m = tree.leaf_count
    members: dict[int, list[int]] = {i: [i] for i in range(m)}
    for i in range(n_apply):
        a, b = int(tree.merges[i, 0]), int(tree.merges[i, 1])
        ma, mb = members.pop(a), members.pop(b)
        if len(ma) < len(mb):
            ma, mb = mb, ma
        ma.extend(mb)
        members[m + i] = ma
    groups = sorted(members.values(), key=min)
    labels = np.empty(m, dtype=np.int64)
    for label, group in enumerate(groups):
        labels[group] = label
    return Partition(labels=labels, cluster_count=len(groups))


def cut_threshold(tree: LinkageTree, delta: float) -> Partition:
    """Apply every finite merge with distance <= delta (monotone heights: a prefix)."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    n_apply = 0
    for i in range(len(tree.merges)):
        d = tree.merges[i, 2]
        if math.isinf(d) or d > delta:
            break
        n_apply = i + 1
    return _replay(tree, n_apply)


def cut_count(tree: LinkageTree, k: int) -> Partition:
    """Undo the newest merges until k clusters remain (bounded by the component floor)."""
    if not 1 <= k <= tree.leaf_count:
        raise ValueError(f"k must be in [1, {tree.leaf_count}], got {k}")
    n_apply = min(tree.leaf_count - k, tree.n_finite)
    return _replay(tree, n_apply)


def representative(points: np.ndarray, partition: Partition) -> np.ndarray:
    """Per cluster, the member index closest to the cluster mean (ties: smallest index)."""
    points = np.asarray(points, dtype=np.float64)
    if len(points) != len(partition.labels):
        raise ValueError("points and partition sizes differ")
    reps = np.empty(partition.cluster_count, dtype=np.int64)
    for label in range(partition.cluster_count):
        idx = partition.members(label)
        mean = points[idx].mean(axis=0)
        dist = np.linalg.norm(points[idx] - mean, axis=1)
        reps[label] = idx[int(np.argmin(dist))]
    return reps
