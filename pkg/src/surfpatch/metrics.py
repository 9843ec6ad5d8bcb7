"""Point-set dissimilarity metrics on independently normalized coordinates."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


class MetricError(ValueError):
    """Empty or degenerate point set."""


def normalize_points(points: np.ndarray) -> np.ndarray:
    """Center the centroid at the origin and scale the bounding-box diagonal to 1."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise MetricError("empty point set")
    centered = pts - pts.mean(axis=0)
    diag = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    if diag < 1e-300:
        raise MetricError("zero extent")
    return centered / diag


def _nearest(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Distance from each point of A to its nearest point in B."""
    return cKDTree(B).query(A, k=1)[0]


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """Symmetric Hausdorff distance after per-set normalization."""
    A = normalize_points(A)
    B = normalize_points(B)
    return float(max(_nearest(A, B).max(), _nearest(B, A).max()))


def chamfer(A: np.ndarray, B: np.ndarray) -> float:
    """Mean nearest-neighbor distance, averaged over both directions."""
    A = normalize_points(A)
    B = normalize_points(B)
    return float(0.5 * (_nearest(A, B).mean() + _nearest(B, A).mean()))


def rmse(A: np.ndarray, B: np.ndarray) -> float:
    """Root mean square of nearest-neighbor distances pooled over both directions."""
    A = normalize_points(A)
    B = normalize_points(B)
    sq = np.concatenate([_nearest(A, B) ** 2, _nearest(B, A) ** 2])
    return float(np.sqrt(sq.mean()))
