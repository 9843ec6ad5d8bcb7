"""Cotangent Laplace-Beltrami operator, partial eigensolve, and heat-kernel signatures."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from surfpatch.mesh import Mesh, MeshError

DEGENERATE_AREA = 1e-14
HKS_MAGIC = b"HKS1"
DEFAULT_FEATURE_LENGTH = 128


class SpectralError(RuntimeError):
    """Eigensolve failure or degenerate spectrum."""


@dataclass(frozen=True)
class LaplaceOperator:
    """Stiffness (cotangent weights, PSD, rows sum to zero) and lumped vertex-area mass."""

    stiffness: sp.csr_matrix
    mass: np.ndarray

    @property
    def n(self) -> int:
        return len(self.mass)


@dataclass(frozen=True)
class EigenBasis:
    """Ascending generalized eigenpairs of (stiffness, mass), M-orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def k(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class HksMatrix:
    """Per-vertex multiscale signatures: row per vertex, one column per diffusion time.

    Columns are heat-trace normalized against the unit-total mass (the
    mass/area-weighted column sum equals 1), which makes the features
    invariant to uniform rescaling of the mesh.
    """

    features: np.ndarray
    times: np.ndarray

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def build_cotangent_laplacian(mesh: Mesh) -> LaplaceOperator:
    """Assemble cotangent stiffness and barycentric lumped mass.

    Off-diagonal stiffness entries are -(cot a + cot b)/2 over the one or two
    angles opposite each edge; diagonals complete zero row sums. Mass entries
    are one third of the incident face area.
    """
    if mesh.n_faces == 0:
        raise MeshError("mesh has no faces")
    v, f = mesh.vertices, mesh.faces
    n = mesh.n_vertices

    referenced = np.zeros(n, dtype=bool)
    referenced[f.ravel()] = True
    if not referenced.all():
        raise MeshError(f"isolated vertex {int(np.flatnonzero(~referenced)[0])}; compact first")

    e0 = v[f[:, 2]] - v[f[:, 1]]  # edge opposite corner 0
    e1 = v[f[:, 0]] - v[f[:, 2]]
    e2 = v[f[:, 1]] - v[f[:, 0]]
    double_area = np.linalg.norm(np.cross(e1, e2), axis=1)
    bad = np.flatnonzero(double_area / 2.0 < DEGENERATE_AREA)
    if bad.size:
        raise MeshError(f"zero-area face {int(bad[0])}")

    # cot of the angle at corner k = (u . w) / |u x w| for the two edges at k
    cot = np.empty((len(f), 3))
    cot[:, 0] = np.einsum("ij,ij->i", -e1, e2) / double_area
    cot[:, 1] = np.einsum("ij,ij->i", -e2, e0) / double_area
    cot[:, 2] = np.einsum("ij,ij->i", -e0, e1) / double_area

    rows, cols, vals = [], [], []
    for corner, (i, j) in enumerate(((1, 2), (2, 0), (0, 1))):
        w = 0.5 * cot[:, corner]
        rows.extend([f[:, i], f[:, j], f[:, i], f[:, j]])
        cols.extend([f[:, j], f[:, i], f[:, i], f[:, j]])
        vals.extend([-w, -w, w, w])
    stiffness = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )

    mass = np.zeros(n)
    third = double_area / 6.0
    for k in range(3):
        np.add.at(mass, f[:, k], third)
    return LaplaceOperator(stiffness=stiffness, mass=mass)


def solve_eigenpairs(op: LaplaceOperator, k: int, seed: int = 0) -> EigenBasis:
    """Smallest k generalized eigenpairs of (stiffness, mass).

    Uses a dense solve for small operators and seeded shift-invert Lanczos
    otherwise; either way the result is deterministic for a fixed seed and
    every pair satisfies a 1e-8 relative residual bound.
    """
    n = op.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    S = op.stiffness
    M = op.mass

    # Shift-invert keeps residuals of the small eigenpairs near factorization
    # accuracy even when sliver triangles blow up the top of the spectrum; the
    # dense solver's backward error scales with ||S|| and is used only where
    # ARPACK cannot run (k ~ n) or the problem is trivially small.
    if k >= n - 2 or n < 64:
        w, phi = scipy.linalg.eigh(S.toarray(), np.diag(M))
        w, phi = w[:k], phi[:, :k]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        Msp = sp.diags(M).tocsc()
        try:
            w, phi = spla.eigsh(S.tocsc(), k=k, M=Msp, sigma=-1e-2, which="LM", v0=v0)
        except spla.ArpackNoConvergence as exc:
            raise SpectralError(f"eigensolver did not converge: {exc}") from exc
        order = np.argsort(w)
        w, phi = w[order], phi[:, order]

    w = np.maximum(w, 0.0)  # clamp -1e-14 style jitter on the null mode

    resid = S @ phi - (M[:, None] * phi) * w[None, :]
    denom = np.linalg.norm(M[:, None] * phi, axis=0)
    rel = np.linalg.norm(resid, axis=0) / np.maximum(denom, 1e-300)
    worst = float(rel.max())
    if worst > 1e-8:
        raise SpectralError(f"eigenpair residual {worst:.3e} exceeds 1e-8")

    # Deterministic sign: largest-magnitude entry of each eigenvector is positive.
    idx = np.argmax(np.abs(phi), axis=0)
    signs = np.sign(phi[idx, np.arange(phi.shape[1])])
    signs[signs == 0] = 1.0
    return EigenBasis(eigenvalues=w, eigenvectors=phi * signs)


def hks_time_samples(eigenvalues: np.ndarray, d: int) -> np.ndarray:
    """Log-spaced diffusion times spanning [4 ln10 / lambda_max, 4 ln10 / lambda_2]."""
    lam2 = eigenvalues[1]
    lam_max = eigenvalues[-1]
    t_min = 4.0 * np.log(10.0) / lam_max
    t_max = 4.0 * np.log(10.0) / lam2
    return np.logspace(np.log10(t_min), np.log10(t_max), d)


def _drop_split_multiplet(eigenvalues: np.ndarray, rel_gap: float = 1e-6) -> int:
    """Prefix length ending strictly below the last computed eigenvalue cluster.

    A truncated eigenbasis is only basis-independent (and so isometry/scale
    invariant through phi^2) if it ends at a spectral gap; symmetric meshes
    carry exactly degenerate multiplets whose computed basis is arbitrary.
    The final cluster is dropped wholesale because it may continue beyond the
    computed window.
    """
    j = len(eigenvalues) - 1
    while j > 2 and eigenvalues[j] - eigenvalues[j - 1] <= rel_gap * eigenvalues[j]:
        j -= 1
    return max(j, 2)


def compute_hks(basis: EigenBasis, mass: np.ndarray, d: int = DEFAULT_FEATURE_LENGTH) -> HksMatrix:
    """Scaled heat-kernel signature matrix from an eigenbasis.

    The constant mode is excluded, the basis is truncated at the last clean
    spectral gap, and each column is divided by its mass-weighted sum so the
    column heat trace equals 1.
    """
    if basis.k < 2:
        raise ValueError("need at least 2 eigenpairs")
    if basis.eigenvalues[1] <= 1e-12:
        raise SpectralError("spectrum degenerate; process components separately")
    keep = _drop_split_multiplet(basis.eigenvalues)
    eigenvalues = basis.eigenvalues[:keep]
    times = hks_time_samples(eigenvalues, d)
    lam = eigenvalues[1:]
    phi_sq = basis.eigenvectors[:, 1:keep] ** 2
    decay = np.exp(-np.outer(lam, times))  # (keep-1, d)
    features = phi_sq @ decay
    # Normalize by the unit-mass-weighted column sum: dividing by the plain
    # heat trace would leave density-valued features carrying a 1/area factor,
    # which breaks pointwise scale invariance.
    unit_mass = mass / mass.sum()
    col_trace = unit_mass @ features
    features = features / col_trace[None, :]
    return HksMatrix(features=features, times=times)


def heat_trace(basis: EigenBasis, d: int = DEFAULT_FEATURE_LENGTH) -> np.ndarray:
    """Global heat trace sum(exp(-lambda_i t_c)) over the same times as compute_hks.

    A d-length transform of the eigenvalue spectrum (constant mode excluded,
    trailing cluster dropped); a compact whole-surface shape descriptor.
    """
    keep = _drop_split_multiplet(basis.eigenvalues)
    times = hks_time_samples(basis.eigenvalues[:keep], d)
    return np.exp(-np.outer(basis.eigenvalues[1:keep], times)).sum(axis=0)


def hks_distance(h: HksMatrix, i: int, j: int) -> float:
    """Euclidean distance between the signature rows of two vertices."""
    return float(np.linalg.norm(h.features[i] - h.features[j]))


def save_hks(h: HksMatrix, path: str | Path) -> None:
    """Little-endian binary: magic, u32 n, u32 d, d times, then row-major features."""
    with open(path, "wb") as fh:
        fh.write(HKS_MAGIC)
        fh.write(struct.pack("<II", h.n, h.d))
        fh.write(np.ascontiguousarray(h.times, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(h.features, dtype="<f8").tobytes())


def load_hks(path: str | Path) -> HksMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != HKS_MAGIC:
            raise ValueError(f"{path}: not an HKS file (magic {magic!r})")
        n, d = struct.unpack("<II", fh.read(8))
        times = np.frombuffer(fh.read(8 * d), dtype="<f8").copy()
        features = np.frombuffer(fh.read(8 * n * d), dtype="<f8").reshape(n, d).copy()
    return HksMatrix(features=features, times=times)
