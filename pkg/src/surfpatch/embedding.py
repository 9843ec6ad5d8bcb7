"""Dimensionality reduction: t-SNE to 2D, UMAP to 1D/2D, and column-wise UMAP aggregation.

Both reducers are self-contained and bit-deterministic for a fixed
(input, seed): exact neighbor computation, seeded initialization, and a
compiled sequential optimizer with its own counter-based RNG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.optimize import curve_fit

EMBEDDING_CLIP = 4.0


@dataclass(frozen=True)
class Embedding2D:
    """2D projection of m feature rows."""

    points: np.ndarray
    method: str
    seed: int


@dataclass(frozen=True)
class AggregatedFeature:
    """Fixed-length vector summarizing a variable-row feature matrix.

    method is "umap" for the column-embedding path and "mean" for the
    small-input fallback.
    """

    values: np.ndarray
    method: str


def _check_finite(features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if not np.isfinite(features).all():
        raise ValueError("input contains non-finite values")
    return features


# ---------------------------------------------------------------------------
# t-SNE


def _conditional_affinities(sq_dists: np.ndarray, perplexity: float) -> np.ndarray:
    """Per-row Gaussian affinities with precision tuned to the target perplexity."""
    m = sq_dists.shape[0]
    target = math.log(perplexity)
    P = np.zeros((m, m))
    for i in range(m):
        d = np.delete(sq_dists[i], i)
        beta, beta_min, beta_max = 1.0, 0.0, math.inf
        for _ in range(64):
            w = np.exp(-d * beta)
            s = w.sum()
            if s <= 1e-300:
                entropy = 0.0
            else:
                p = w / s
                entropy = -(p * np.log(np.maximum(p, 1e-300))).sum()
            if abs(entropy - target) < 1e-7:
                break
            if entropy > target:
                beta_min = beta
                beta = beta * 2.0 if beta_max == math.inf else 0.5 * (beta + beta_max)
            else:
                beta_max = beta
                beta = 0.5 * (beta + beta_min)
        w = np.exp(-d * beta)
        s = w.sum()
        row = w / s if s > 1e-300 else np.full(m - 1, 1.0 / (m - 1))
        P[i, :i] = row[:i]
        P[i, i + 1 :] = row[i:]
    return P


@njit(cache=True)
def _tsne_grad(P: np.ndarray, Y: np.ndarray) -> np.ndarray:  # pragma: no cover - compiled
    m = Y.shape[0]
    num = np.zeros((m, m))
    z = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            d2 = 0.0
            for c in range(2):
                diff = Y[i, c] - Y[j, c]
                d2 += diff * diff
            q = 1.0 / (1.0 + d2)
            num[i, j] = q
            num[j, i] = q
            z += 2.0 * q
    grad = np.zeros((m, 2))
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            w = (P[i, j] - num[i, j] / z) * num[i, j]
            for c in range(2):
                grad[i, c] += 4.0 * w * (Y[i, c] - Y[j, c])
    return grad


@njit(cache=True)
def _tsne_kl(P: np.ndarray, Y: np.ndarray) -> float:  # pragma: no cover - compiled
    m = Y.shape[0]
    z = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            d2 = 0.0
            for c in range(2):
                diff = Y[i, c] - Y[j, c]
                d2 += diff * diff
            z += 2.0 / (1.0 + d2)
    kl = 0.0
    for i in range(m):
        for j in range(m):
            if i == j or P[i, j] <= 1e-300:
                continue
            d2 = 0.0
            for c in range(2):
                diff = Y[i, c] - Y[j, c]
                d2 += diff * diff
            q = max(1.0 / ((1.0 + d2) * z), 1e-300)
            kl += P[i, j] * math.log(P[i, j] / q)
    return kl


def tsne_2d(
    features: np.ndarray,
    perplexity: float = 30.0,
    iterations: int = 1000,
    seed: int = 0,
) -> Embedding2D:
    """Project feature rows to 2D with t-SNE.

    Symmetrized Gaussian input affinities at the requested perplexity, a
    Student-t output kernel, and momentum gradient descent with early
    exaggeration (factor 12 for the first 250 iterations) from a seeded
    Gaussian initialization (sigma 1e-4). The final KL divergence never
    exceeds the initial one.
    """
    X = _check_finite(features)
    m = len(X)
    if m < 4:
        raise ValueError(f"need at least 4 rows, got {m}")
    if perplexity > (m - 1) / 3:
        raise ValueError(f"perplexity {perplexity} infeasible for {m} rows")

    sq = np.maximum(_pairwise_sq_dists(X), 0.0)
    cond = _conditional_affinities(sq, perplexity)
    P = (cond + cond.T) / (2.0 * m)
    P = np.maximum(P, 1e-12)

    rng = np.random.default_rng(seed)
    rng2 = np.random.default_rng(seed)
    Y = rng.standard_normal((m, 2)) * 1e-4
    kl_initial = _tsne_kl(P, Y)

    exaggeration = 12.0
    # the canonical 250-iteration exaggeration phase, shrunk for short runs
    stop_exaggeration = min(250, iterations // 2)
    eta = max(m / 48.0, 50.0)
    momentum = 0.5
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    P_run = P * exaggeration

    for it in range(iterations):
        if it == stop_exaggeration:
            P_run = P
            momentum = 0.8
        grad = _tsne_grad(P_run, Y)
        inc = np.sign(grad) != np.sign(velocity)
        gains = np.where(inc, gains + 0.2, gains * 0.8)
        np.clip(gains, 0.01, None, out=gains)
        velocity = momentum * velocity - eta * gains * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)

    kl_final = _tsne_kl(P, Y)
    if kl_final > kl_initial:
        # Degenerate inputs (near-uniform affinities) start at the optimum;
        # keep the initial layout rather than a worse-KL wander away from it.
        Y = rng2.standard_normal((m, 2)) * 1e-4
    return Embedding2D(points=Y, method="tsne", seed=seed)


def _pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    norms = np.einsum("ij,ij->i", X, X)
    sq = norms[:, None] + norms[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(sq, 0.0)
    return sq


# ---------------------------------------------------------------------------
# UMAP


@lru_cache(maxsize=32)
def find_ab_params(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Fit the output-kernel parameters to the target min_dist/spread curve."""
    xv = np.linspace(0, spread * 3, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    (a, b), _ = curve_fit(curve, xv, yv)
    return float(a), float(b)


@njit(cache=True)
def _pairwise_dists_sorted(X: np.ndarray) -> np.ndarray:  # pragma: no cover - compiled
    """Pairwise Euclidean distances with coordinate terms summed in sorted order.

    Canonical summation makes the result bit-identical under any common
    permutation of the coordinate axes, which keeps the downstream stochastic
    layout schedule (and so the whole embedding) invariant to input row order
    in the aggregation path.
    """
    m, p = X.shape
    out = np.zeros((m, m))
    buf = np.empty(p)
    for i in range(m):
        for j in range(i + 1, m):
            for c in range(p):
                diff = X[i, c] - X[j, c]
                buf[c] = diff * diff
            buf.sort()
            s = 0.0
            for c in range(p):
                s += buf[c]
            d = math.sqrt(s)
            out[i, j] = d
            out[j, i] = d
    return out


@njit(cache=True)
def _smooth_knn_calibration(
    knn_dists: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:  # pragma: no cover - compiled
    """Per-point (rho, sigma): rho is the nearest positive neighbor distance and sigma
    solves sum_j exp(-max(0, d_j - rho)/sigma) = log2(k)."""
    m = knn_dists.shape[0]
    target = math.log2(k)
    rhos = np.zeros(m)
    sigmas = np.ones(m)
    for i in range(m):
        d = knn_dists[i]
        rho = 0.0
        for v in d:
            if v > 0.0:
                rho = v
                break
        rhos[i] = rho
        if target <= 0:
            sigmas[i] = 1.0
            continue
        lo, hi, mid = 0.0, math.inf, 1.0
        for _ in range(64):
            val = 0.0
            for v in d:
                gap = v - rho
                val += math.exp(-gap / mid) if gap > 0.0 else 1.0
            if abs(val - target) < 1e-5:
                break
            if val > target:
                hi = mid
                mid = 0.5 * (lo + hi)
            else:
                lo = mid
                mid = mid * 2.0 if hi == math.inf else 0.5 * (lo + hi)
        mean_d = d.mean()
        floor = 1e-3 * (mean_d if mean_d > 0 else 1.0)
        sigmas[i] = mid if mid > floor else floor
    return rhos, sigmas


def _fuzzy_graph(X: np.ndarray, n_neighbors: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact-kNN fuzzy simplicial set as COO edge arrays (head, tail, weight)."""
    m = len(X)
    k = min(n_neighbors, m - 1)
    dists = _pairwise_dists_sorted(np.ascontiguousarray(X))
    order = np.argsort(dists, axis=1, kind="stable")  # ties resolve by index
    knn_idx = order[:, 1 : k + 1]
    knn_d = np.take_along_axis(dists, knn_idx, axis=1)
    rhos, sigmas = _smooth_knn_calibration(knn_d, k)

    W = np.zeros((m, m))
    for i in range(m):
        W[i, knn_idx[i]] = np.exp(-np.maximum(knn_d[i] - rhos[i], 0.0) / sigmas[i])
    union = W + W.T - W * W.T
    head, tail = np.nonzero(union)
    return head.astype(np.int64), tail.astype(np.int64), union[head, tail]


@njit(cache=True)
def _umap_epochs(
    pos: np.ndarray,
    head: np.ndarray,
    tail: np.ndarray,
    epochs_per_sample: np.ndarray,
    n_epochs: int,
    a: float,
    b: float,
    rng_state: np.uint64,
    negative_rate: int,
    initial_alpha: float,
) -> None:  # pragma: no cover - compiled
    n_points, dim = pos.shape
    n_edges = len(head)
    epochs_per_negative = epochs_per_sample / negative_rate
    epoch_of_next = epochs_per_sample.copy()
    epoch_of_next_neg = epochs_per_negative.copy()
    state = rng_state
    for epoch in range(n_epochs):
        alpha = initial_alpha * (1.0 - epoch / n_epochs)
        bound = float(epoch + 1)
        for e in range(n_edges):
            if epoch_of_next[e] > bound:
                continue
            j = head[e]
            k = tail[e]
            d2 = 0.0
            for c in range(dim):
                diff = pos[j, c] - pos[k, c]
                d2 += diff * diff
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (a * d2**b + 1.0)
            else:
                coeff = 0.0
            for c in range(dim):
                g = coeff * (pos[j, c] - pos[k, c])
                if g > EMBEDDING_CLIP:
                    g = EMBEDDING_CLIP
                elif g < -EMBEDDING_CLIP:
                    g = -EMBEDDING_CLIP
                pos[j, c] += alpha * g
                pos[k, c] -= alpha * g
            epoch_of_next[e] += epochs_per_sample[e]

            n_neg = int((bound - epoch_of_next_neg[e]) / epochs_per_negative[e])
            for _ in range(n_neg):
                state ^= state << np.uint64(13)
                state ^= state >> np.uint64(7)
                state ^= state << np.uint64(17)
                other = int(state % np.uint64(n_points))
                if other == j:
                    continue
                d2 = 0.0
                for c in range(dim):
                    diff = pos[j, c] - pos[other, c]
                    d2 += diff * diff
                if d2 > 0.0:
                    coeff = (2.0 * b) / ((0.001 + d2) * (a * d2**b + 1.0))
                else:
                    coeff = 0.0
                for c in range(dim):
                    if coeff > 0.0:
                        g = coeff * (pos[j, c] - pos[other, c])
                        if g > EMBEDDING_CLIP:
                            g = EMBEDDING_CLIP
                        elif g < -EMBEDDING_CLIP:
                            g = -EMBEDDING_CLIP
                    else:
                        g = EMBEDDING_CLIP
                    pos[j, c] += alpha * g
            epoch_of_next_neg[e] += n_neg * epochs_per_negative[e]


def umap_embed(
    features: np.ndarray,
    target_dim: int = 2,
    n_neighbors: int = 15,
    min_dist: float = 0.1,
    seed: int = 0,
    n_epochs: int = 200,
) -> np.ndarray:
    """Embed feature rows into 1 or 2 dimensions with UMAP.

    Exact k-nearest-neighbor graph, fuzzy-union affinities calibrated to
    log2(k), and cross-entropy layout via seeded stochastic gradient descent
    with 5 negative samples per positive update.
    """
    X = _check_finite(features)
    m = len(X)
    if m < 2:
        raise ValueError(f"need at least 2 rows, got {m}")
    if target_dim not in (1, 2):
        raise ValueError("target_dim must be 1 or 2")

    head, tail, weights = _fuzzy_graph(X, n_neighbors)
    a, b = find_ab_params(min_dist)

    epochs_per_sample = np.full(len(weights), -1.0)
    wmax = weights.max()
    nz = weights > 0
    epochs_per_sample[nz] = wmax / weights[nz]

    rng = np.random.default_rng(seed)
    pos = rng.uniform(-10.0, 10.0, size=(m, target_dim))
    kernel_seed = np.uint64(rng.integers(1, 2**63))
    _umap_epochs(
        pos, head, tail, epochs_per_sample, n_epochs, a, b, kernel_seed, 5, 1.0
    )
    return pos


def umap_aggregate(M: np.ndarray, seed: int = 0, n_epochs: int = 200) -> AggregatedFeature:
    """Collapse an (n, d) feature matrix to a length-d vector.

    The d feature columns are treated as d points in n-dimensional space and
    embedded to one dimension; the result keeps column order, so it has fixed
    length d for any vertex count. Matrices with fewer than 10 rows fall back
    to column means (a 1-D layout over so few coordinates is noise-dominated).
    """
    M = _check_finite(M)
    if M.ndim != 2 or M.shape[1] < 2:
        raise ValueError(f"need an (n, d>=2) matrix, got shape {M.shape}")
    if M.shape[0] < 10:
        return AggregatedFeature(values=M.mean(axis=0), method="mean")
    emb = umap_embed(M.T, target_dim=1, seed=seed, n_epochs=n_epochs)
    return AggregatedFeature(values=emb.ravel(), method="umap")
