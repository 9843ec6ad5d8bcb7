"""Analytic steady vector fields, RK4 streamlines, stream-surface tracing, and ensembles."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from surfpatch.mesh import Mesh, save_obj

FIELD_KINDS = ("tornado", "two_swirls", "five_critical_points")
STAGNATION_SPEED = 1e-9


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=np.float64))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=np.float64))

    def contains(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64)
        return np.all((p >= self.lo) & (p <= self.hi), axis=-1)

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo


UNIT_BOX = Box(np.zeros(3), np.ones(3))


def _safe_expression(expression: str):
    """Compile a '(fx, fy, fz)' expression of x, y, z into a vectorized callable."""
    allowed = {
        "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
        "sqrt": np.sqrt, "tanh": np.tanh, "abs": np.abs, "pi": np.pi,
        "np": np,
    }
    try:
        fn = eval(f"lambda x, y, z: ({expression})", {"__builtins__": {}}, allowed)
        fn(0.0, 0.0, 0.0)
    except Exception as exc:
        raise ValueError(f"bad field expression {expression!r}: {exc}") from exc
    return fn


@dataclass(frozen=True)
class VectorField:
    """Closed-form steady velocity field over an axis-aligned box.

    Evaluation outside the domain returns the zero vector; use
    ``domain.contains`` to distinguish true stagnation from out-of-domain.
    """

    kind: str
    domain: Box = UNIT_BOX
    expression: str | None = None
    _expr_fn: object = dc_field(default=None, repr=False, compare=False)

    def velocity(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        if self.kind == "tornado":
            v = _tornado(x, y, z)
        elif self.kind == "two_swirls":
            v = _two_swirls(x, y, z)
        elif self.kind == "five_critical_points":
            v = _five_critical_points(p)
        elif self.kind == "custom":
            fx, fy, fz = self._expr_fn(x, y, z)
            v = np.column_stack(
                [np.broadcast_to(c, x.shape).astype(np.float64) for c in (fx, fy, fz)]
            )
        else:
            raise ValueError(f"unknown field kind {self.kind!r}")
        v = np.where(self.domain.contains(p)[:, None], v, 0.0)
        return v[0] if single else v


def make_field(kind: str, domain: Box | None = None, expression: str | None = None) -> VectorField:
    if kind == "custom":
        if not expression:
            raise ValueError("custom field needs an expression")
        return VectorField(
            kind="custom",
            domain=domain or UNIT_BOX,
            expression=expression,
            _expr_fn=_safe_expression(expression),
        )
    if kind not in FIELD_KINDS:
        raise ValueError(f"unknown field kind {kind!r}; choose from {FIELD_KINDS} or 'custom'")
    return VectorField(kind=kind, domain=domain or UNIT_BOX)


def _tornado(x, y, z):
    # Inward spiral around the vertical axis through the cube center, rotation
    # rate growing with height, constant updraft.
    xc, yc = x - 0.5, y - 0.5
    a, w0 = 0.1, 0.2
    r = 1.0 + 0.5 * z
    return np.column_stack([-xc * a - yc * r, xc * r - yc * a, np.full_like(x, w0)])


def _two_swirls(x, y, z):
    # Counter-rotating Gaussian-core line vortices; each term is masked by the
    # other core so both prescribed centers are exact stagnation points of the
    # in-plane flow.
    sigma2 = 2.0 * 0.15**2
    w0 = 0.1
    out = np.zeros((len(x), 3))
    out[:, 2] = w0
    centers = ((0.75, 0.5, 1.0), (0.25, 0.5, -1.0))
    r2 = [(x - cx) ** 2 + (y - cy) ** 2 for cx, cy, _ in centers]
    for i, (cx, cy, s) in enumerate(centers):
        other = 1 - i
        amp = s * np.exp(-r2[i] / sigma2) * (1.0 - np.exp(-r2[other] / sigma2))
        out[:, 0] += amp * -(y - cy)
        out[:, 1] += amp * (x - cx)
    return out


_FCP_CENTERS = np.array(
    [
        [0.5, 0.5, 0.5],
        [0.25, 0.25, 0.25],
        [0.75, 0.75, 0.25],
        [0.75, 0.25, 0.75],
        [0.25, 0.75, 0.75],
    ]
)
_FCP_MATRICES = np.array(
    [
        [[0.2, -1.0, 0.0], [1.0, 0.2, 0.0], [0.0, 0.0, -0.4]],   # spiral source
        [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.6]],    # saddle
        [[-1.0, 0.0, 0.0], [0.0, 0.8, 0.0], [0.0, 0.0, 0.5]],    # saddle
        [[-0.3, 0.0, 0.0], [0.0, 0.1, -1.0], [0.0, 1.0, 0.1]],   # spiral about x
        [[-0.8, 0.0, 0.0], [0.0, -0.6, 0.0], [0.0, 0.0, 1.0]],   # sink saddle
    ]
)


def _five_critical_points(p: np.ndarray) -> np.ndarray:
    # Five masked linear terms; the masking products pin an exact zero of the
    # total field at every prescribed center.
    sigma2 = 2.0 * 0.2**2
    diffs = p[:, None, :] - _FCP_CENTERS[None, :, :]  # (n, 5, 3)
    r2 = np.einsum("nij,nij->ni", diffs, diffs)
    falloff = np.exp(-r2 / sigma2)
    masks = 1.0 - falloff
    out = np.zeros((len(p), 3))
    for i in range(5):
        linear = diffs[:, i, :] @ _FCP_MATRICES[i].T
        amp = falloff[:, i] * np.prod(np.delete(masks, i, axis=1), axis=1)
        out += amp[:, None] * linear
    return out


# ---------------------------------------------------------------------------
# Integration


def rk4_step(field: VectorField, p: np.ndarray, h: float) -> np.ndarray:
    k1 = field.velocity(p)
    k2 = field.velocity(p + 0.5 * h * k1)
    k3 = field.velocity(p + 0.5 * h * k2)
    k4 = field.velocity(p + h * k3)
    return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_streamline(
    field: VectorField, seed: np.ndarray, h: float, max_steps: int = 1000
) -> np.ndarray:
    """Fixed-step RK4 polyline; stops on domain exit, stagnation, or the step budget."""
    if h <= 0:
        raise ValueError("h must be > 0")
    p = np.asarray(seed, dtype=np.float64)
    points = [p]
    if not field.domain.contains(p):
        return np.array(points)
    for _ in range(max_steps):
        if np.linalg.norm(field.velocity(p)) < STAGNATION_SPEED:
            break
        p_next = rk4_step(field, p, h)
        if not field.domain.contains(p_next):
            break
        points.append(p_next)
        p = p_next
    return np.array(points)


# ---------------------------------------------------------------------------
# Seeding curves


@dataclass(frozen=True)
class SeedCurve:
    """Polyline seeding curve with the number of front samples to start from."""

    points: np.ndarray
    samples: int = 24

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 2:
            raise ValueError("seed curve needs >= 2 control points of dimension 3")
        if self.samples < 2:
            raise ValueError("need >= 2 samples")
        object.__setattr__(self, "points", pts)

    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    def resample(self, count: int | None = None) -> np.ndarray:
        count = count or self.samples
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        total = cum[-1]
        if total < 1e-9:
            raise ValueError("degenerate curve")
        targets = np.linspace(0.0, total, count)
        out = np.empty((count, 3))
        for i, t in enumerate(targets):
            k = min(np.searchsorted(cum, t, side="right") - 1, len(seg) - 1)
            frac = (t - cum[k]) / seg[k] if seg[k] > 0 else 0.0
            out[i] = self.points[k] * (1 - frac) + self.points[k + 1] * frac
        return out


def _jacobian(field: VectorField, p: np.ndarray, step: float) -> np.ndarray:
    J = np.empty((3, 3))
    for c in range(3):
        dp = np.zeros(3)
        dp[c] = step
        J[:, c] = (field.velocity(p + dp) - field.velocity(p - dp)) / (2.0 * step)
    return J


def binormal(field: VectorField, p: np.ndarray, step: float) -> np.ndarray | None:
    """normalize(v x (Jv)); None where the curvature direction is undefined."""
    v = field.velocity(p)
    J = _jacobian(field, p, step)
    b = np.cross(v, J @ v)
    norm = np.linalg.norm(b)
    if norm < 1e-9:
        return None
    return b / norm


def random_seed_curves(
    field: VectorField,
    count: int,
    length_range: tuple[float, float] = (0.15, 0.35),
    rng_seed: int = 0,
    n_ctrl: int = 12,
    samples: int = 24,
) -> list[SeedCurve]:
    """Deterministic random curves marched along the local flow binormal.

    Each curve starts at a uniform in-domain point and steps along
    b = normalize(v x (Jv)) (finite-difference Jacobian), flipping signs for
    continuity; where b is undefined a seeded random direction orthogonal to
    the velocity is used. Marching stops at the domain boundary.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    extent = float(field.domain.extent.mean())
    fd_step = 1e-4 * extent
    margin = 0.08
    lo = field.domain.lo + margin * field.domain.extent
    span = (1.0 - 2.0 * margin) * field.domain.extent

    curves: list[SeedCurve] = []
    attempts = 0
    while len(curves) < count:
        attempts += 1
        if attempts > 200 * count:
            raise RuntimeError("could not place seed curves inside the domain")
        start = lo + rng.uniform(0.0, 1.0, 3) * span
        length = rng.uniform(*length_range)
        ds = length / (n_ctrl - 1)
        pts = [start]
        prev_b: np.ndarray | None = None
        p = start
        for _ in range(n_ctrl - 1):
            b = binormal(field, p, fd_step)
            if b is None:
                v = field.velocity(p)
                speed = np.linalg.norm(v)
                raw = rng.standard_normal(3)
                if speed > STAGNATION_SPEED:
                    raw -= (raw @ v) / speed**2 * v
                norm = np.linalg.norm(raw)
                if norm < 1e-12:
                    break
                b = raw / norm
            if prev_b is not None and float(b @ prev_b) < 0.0:
                b = -b
            p = p + ds * b
            if not field.domain.contains(p):
                break
            pts.append(p)
            prev_b = b
        if len(pts) >= max(2, n_ctrl // 2):
            curves.append(SeedCurve(np.array(pts), samples=samples))
    return curves


# ---------------------------------------------------------------------------
# Stream surface tracing


@dataclass(frozen=True)
class StreamSurface:
    """Traced triangle mesh plus per-vertex provenance."""

    mesh: Mesh
    streamline_id: np.ndarray
    arc_length: np.ndarray


@dataclass(frozen=True)
class TraceParams:
    h: float = 0.01
    max_steps: int = 250
    d_min: float = 0.008
    d_max: float = 0.03


class _Node:
    __slots__ = ("pos", "prev", "vid", "sid", "arc")

    def __init__(self, pos, prev, vid, sid, arc):
        self.pos = pos
        self.prev = prev
        self.vid = vid
        self.sid = sid
        self.arc = arc


def _zipper(old_rail: list[_Node], new_rail: list[_Node], faces: list) -> None:
    """Stitch two vertex rails with triangles, advancing along the shorter diagonal."""
    i, j = 0, 0
    na, nb = len(old_rail), len(new_rail)
    while i < na - 1 or j < nb - 1:
        can_a, can_b = i < na - 1, j < nb - 1
        if can_a and can_b:
            da = np.linalg.norm(old_rail[i + 1].pos - new_rail[j].pos)
            db = np.linalg.norm(new_rail[j + 1].pos - old_rail[i].pos)
            step_a = da <= db
        else:
            step_a = can_a
        if step_a:
            faces.append((old_rail[i].vid, new_rail[j].vid, old_rail[i + 1].vid))
            i += 1
        else:
            faces.append((old_rail[i].vid, new_rail[j].vid, new_rail[j + 1].vid))
            j += 1


def trace_stream_surface(
    field: VectorField,
    curve: SeedCurve,
    params: TraceParams = TraceParams(),
    collect_fronts: list | None = None,
) -> StreamSurface:
    """Advance a particle front from the seeding curve and stitch fronts into a mesh.

    After each step, a midpoint particle (seeded on the pre-step segment, then
    advected) is inserted wherever neighbor spacing exceeds d_max, and interior
    particles are dropped where spacing falls below d_min. Particles stop
    individually on domain exit or stagnation; surviving sub-fronts advance as
    separate chains.
    """
    if curve.length() < 1e-9:
        raise ValueError("degenerate curve")
    start = curve.resample()
    verts: list[np.ndarray] = []
    sids: list[int] = []
    arcs: list[float] = []
    faces: list[tuple[int, int, int]] = []

    def emit(pos: np.ndarray, sid: int, arc: float) -> int:
        verts.append(pos)
        sids.append(sid)
        arcs.append(arc)
        return len(verts) - 1

    next_sid = len(start)
    chain = [
        _Node(p, p, emit(p, sid, 0.0), sid, 0.0) for sid, p in enumerate(start)
    ]
    chains = [chain]

    def advect(node: _Node) -> _Node | None:
        v = field.velocity(node.pos)
        if np.linalg.norm(v) < STAGNATION_SPEED:
            return None
        p_next = rk4_step(field, node.pos, params.h)
        if not field.domain.contains(p_next):
            return None
        return _Node(
            p_next,
            node.pos,
            -1,
            node.sid,
            node.arc + float(np.linalg.norm(p_next - node.pos)),
        )

    for _ in range(params.max_steps):
        new_chains: list[list[_Node]] = []
        for chain in chains:
            moved = [advect(node) for node in chain]
            run: list[tuple[_Node, _Node]] = []
            runs: list[list[tuple[_Node, _Node]]] = []
            for old_node, new_node in zip(chain, moved):
                if new_node is None:
                    if len(run) >= 2:
                        runs.append(run)
                    run = []
                else:
                    run.append((old_node, new_node))
            if len(run) >= 2:
                runs.append(run)

            for pairs in runs:
                old_rail = [old for old, _ in pairs]
                new_nodes = [new for _, new in pairs]

                # drop interior particles that crowd below d_min
                kept = [new_nodes[0]]
                for node in new_nodes[1:-1]:
                    if np.linalg.norm(node.pos - kept[-1].pos) >= params.d_min:
                        kept.append(node)
                kept.append(new_nodes[-1])

                # split gaps above d_max with advected midpoint particles
                for _ in range(8):
                    gaps = [
                        np.linalg.norm(kept[idx + 1].pos - kept[idx].pos)
                        for idx in range(len(kept) - 1)
                    ]
                    if not any(g > params.d_max for g in gaps):
                        break
                    refined: list[_Node] = [kept[0]]
                    for idx in range(len(kept) - 1):
                        if gaps[idx] > params.d_max:
                            mid_prev = 0.5 * (kept[idx].prev + kept[idx + 1].prev)
                            arc = 0.5 * (kept[idx].arc + kept[idx + 1].arc)
                            probe = _Node(mid_prev, mid_prev, -1, next_sid, arc)
                            mid = advect(probe)
                            if mid is None:
                                mid_pos = 0.5 * (kept[idx].pos + kept[idx + 1].pos)
                                mid = _Node(mid_pos, mid_prev, -1, next_sid, arc)
                            mid.sid = next_sid
                            next_sid += 1
                            refined.append(mid)
                        refined.append(kept[idx + 1])
                    kept = refined

                for node in kept:
                    node.vid = emit(node.pos, node.sid, node.arc)
                _zipper(old_rail, kept, faces)
                new_chains.append(kept)
        chains = new_chains
        if collect_fronts is not None:
            for chain in chains:
                collect_fronts.append(np.array([node.pos for node in chain]))
        if not chains:
            break

    vert_arr = np.array(verts).reshape(-1, 3)
    face_arr = np.array(faces, dtype=np.int64).reshape(-1, 3)
    if len(face_arr):
        used = np.unique(face_arr)
        remap = np.full(len(vert_arr), -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        vert_arr = vert_arr[used]
        face_arr = remap[face_arr]
        sid_arr = np.asarray(sids, dtype=np.int64)[used]
        arc_arr = np.asarray(arcs, dtype=np.float64)[used]
    else:
        sid_arr = np.zeros(0, dtype=np.int64)
        arc_arr = np.zeros(0, dtype=np.float64)
        vert_arr = vert_arr[:0]
    mesh = Mesh(vert_arr, face_arr)
    return StreamSurface(mesh=mesh, streamline_id=sid_arr, arc_length=arc_arr)


# ---------------------------------------------------------------------------
# Ensembles


@dataclass(frozen=True)
class EnsembleParams:
    trace: TraceParams = TraceParams(max_steps=500)
    length_range: tuple[float, float] = (0.08, 0.5)
    steps_range: tuple[int, int] = (120, 500)  # integration span drawn per surface
    front_samples: int = 24
    min_vertices: int = 200
    max_attempts: int = 50


def generate_ensemble(
    field: VectorField,
    count: int,
    rng_seed: int,
    out_dir: str | Path,
    params: EnsembleParams = EnsembleParams(),
) -> Path:
    """Trace ``count`` random stream surfaces and write OBJ files plus a manifest.

    Surfaces with fewer than ``params.min_vertices`` vertices are discarded and
    redrawn from the same per-surface substream, so output is deterministic in
    (field, count, rng_seed, params). Returns the manifest path.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for i in range(count):
        surface = None
        curve = None
        steps = params.trace.max_steps
        for attempt in range(params.max_attempts):
            seq = np.random.SeedSequence((rng_seed, i, attempt))
            draw_seed = int(seq.generate_state(1)[0])
            lo, hi = params.steps_range
            steps = int(lo + np.random.default_rng(draw_seed).integers(hi - lo + 1))
            trace = TraceParams(
                h=params.trace.h,
                max_steps=min(steps, params.trace.max_steps),
                d_min=params.trace.d_min,
                d_max=params.trace.d_max,
            )
            curve = random_seed_curves(
                field,
                1,
                length_range=params.length_range,
                rng_seed=draw_seed,
                samples=params.front_samples,
            )[0]
            candidate = trace_stream_surface(field, curve, trace)
            if candidate.mesh.n_vertices >= params.min_vertices:
                surface = candidate
                break
        if surface is None:
            raise RuntimeError(f"surface {i}: no usable trace after {params.max_attempts} draws")
        fname = f"surf_{i:04d}.obj"
        save_obj(surface.mesh, out / fname)
        manifest.append(
            {
                "file": fname,
                "field": field.kind,
                "rng_seed": rng_seed,
                "curve_points": np.asarray(curve.points).tolist(),
                "h": params.trace.h,
                "steps": min(steps, params.trace.max_steps),
            }
        )
    manifest_path = out / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
    return manifest_path


def ensemble_checksum(out_dir: str | Path) -> str:
    """SHA-256 over all OBJ bytes and the manifest, for determinism checks."""
    out = Path(out_dir)
    digest = hashlib.sha256()
    for path in sorted(out.glob("*.obj")) + [out / "manifest.json"]:
        digest.update(path.name.encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()
