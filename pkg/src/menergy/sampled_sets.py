"""Discrete surrogates of m-dimensional sets in R^n.

A SampledSet carries points, mock tangent planes, and quadrature weights
(the Hausdorff mass each sample represents). Generators produce analytic
fixtures with exact tangents and exact total mass; Moebius maps push all
three through with the correct conformal factors.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .grassmann import Subspace

FORMAT_TAG = "sampled-set/1"

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class SampledSet:
    """Weighted point cloud with optional mock tangent planes."""

    intrinsic_dim: int
    points: np.ndarray                       # (N, n)
    frames: Optional[tuple]                  # N Subspace values, or None
    weights: np.ndarray                      # (N,), positive
    labels: Optional[tuple] = None

    def __post_init__(self) -> None:
        points = np.atleast_2d(np.asarray(self.points, float))
        weights = np.asarray(self.weights, float)
        n = points.shape[1]
        m = self.intrinsic_dim
        if not 1 <= m <= n:
            raise ValueError("need 1 <= intrinsic_dim <= ambient_dim")
        if weights.shape != (points.shape[0],):
            raise ValueError("weights must have one entry per point")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        if self.frames is not None:
            frames = tuple(self.frames)
            if len(frames) != points.shape[0]:
                raise ValueError("frames must have one entry per point")
            for fr in frames:
                if fr.ambient_dim != n or fr.dim != m:
                    raise ValueError("frame dimensions do not match the set")
            object.__setattr__(self, "frames", frames)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != points.shape[0]:
                raise ValueError("labels must have one entry per point")
            object.__setattr__(self, "labels", labels)
        if points.shape[0] > 1:
            diam = float(np.max(np.ptp(points, axis=0)))
            nearest = cKDTree(points).query(points, k=2)[0][:, 1]
            if float(np.min(nearest)) <= 1e-12 * max(diam, 1e-300):
                raise ValueError("points are not pairwise distinct")
        points = points.copy()
        points.setflags(write=False)
        weights = weights.copy()
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def frame_array(self) -> np.ndarray:
        """Stacked frames, shape (N, m, n). Requires frames."""
        if self.frames is None:
            raise ValueError("sampled set has no tangent frames")
        return np.stack([fr.frame for fr in self.frames])

    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def ball_indices(self, center, r: float) -> np.ndarray:
        d = np.linalg.norm(self.points - np.asarray(center, float), axis=1)
        return np.nonzero(d < r)[0]


# ---------------------------------------------------------------------------
# Moebius maps


@dataclass(frozen=True)
class Similarity:
    """x -> scale * Q x + translation, Q orthogonal."""

    orthogonal: np.ndarray
    scale: float = 1.0
    translation: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        q = np.asarray(self.orthogonal, float)
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if np.max(np.abs(q.T @ q - np.eye(q.shape[0]))) > 1e-12:
            raise ValueError("matrix is not orthogonal")
        t = (
            np.zeros(q.shape[0])
            if self.translation is None
            else np.asarray(self.translation, float)
        )
        object.__setattr__(self, "orthogonal", q)
        object.__setattr__(self, "translation", t)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.scale * (np.asarray(x, float) @ self.orthogonal.T) + self.translation

    def inverse(self) -> "Similarity":
        qinv = self.orthogonal.T
        return Similarity(qinv, 1.0 / self.scale, -(qinv @ self.translation) / self.scale)


@dataclass(frozen=True)
class SphereInversion:
    """x -> c + rho^2 (x - c) / |x - c|^2."""

    center: np.ndarray
    radius: float = 1.0

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("inversion radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, float))

    def apply(self, x: np.ndarray) -> np.ndarray:
        d = np.atleast_2d(np.asarray(x, float)) - self.center
        norms2 = np.sum(d * d, axis=1)
        if np.any(norms2 < 1e-24):
            raise ValueError("point at inversion center")
        out = self.center + self.radius**2 * d / norms2[:, None]
        return out if np.asarray(x).ndim == 2 else out[0]

    def inverse(self) -> "SphereInversion":
        return self


MobiusMap = Union[Similarity, SphereInversion]


def apply_mobius(s: SampledSet, t: MobiusMap) -> SampledSet:
    """Push points, tangent frames, and weights through a Moebius map."""
    m = s.intrinsic_dim
    points = t.apply(s.points)
    if isinstance(t, Similarity):
        frames = None
        if s.frames is not None:
            frames = tuple(Subspace(fr.frame @ t.orthogonal.T) for fr in s.frames)
        weights = s.weights * t.scale**m
    else:
        d = s.points - t.center
        norms2 = np.sum(d * d, axis=1)
        factor = t.radius**2 / norms2
        frames = None
        if s.frames is not None:
            new_frames = []
            for i, fr in enumerate(s.frames):
                u = d[i] / math.sqrt(norms2[i])
                reflected = fr.frame - 2.0 * np.outer(fr.frame @ u, u)
                new_frames.append(Subspace(reflected))
            frames = tuple(new_frames)
        weights = s.weights * factor**m
    return SampledSet(m, points, frames, weights, s.labels)


# ---------------------------------------------------------------------------
# quadrature point layouts


def disk_samples(radius: float, rings: int):
    """Polar layout of a planar disk whose weights sum exactly to its area.

    Returns (coords, weights): a center sample for the innermost ring and
    6(2k-1) equally weighted samples on each outer ring k.
    """
    if rings < 2:
        raise ValueError("need at least 2 rings")
    h = radius / rings
    coords = [np.zeros(2)]
    weights = [math.pi * h * h]
    for k in range(2, rings + 1):
        nk = 6 * (2 * k - 1)
        rk = (k - 0.5) * h
        ang = 2.0 * math.pi * (np.arange(nk) + 0.5 * (k % 2)) / nk
        coords.append(np.column_stack([rk * np.cos(ang), rk * np.sin(ang)]))
        weights.append(np.full(nk, math.pi * h * h * (2 * k - 1) / nk))
    return np.vstack([np.atleast_2d(c) for c in coords]), np.concatenate(
        [np.atleast_1d(w) for w in weights]
    )


def segment_samples(radius: float, cells: int):
    """Midpoint layout of [-radius, radius] including the exact center."""
    cells = cells + 1 - cells % 2  # force odd so the center is a node
    h = 2.0 * radius / cells
    coords = -radius + (np.arange(cells) + 0.5) * h
    return coords[:, None], np.full(cells, h)


def _patch_samples(m: int, radius: float, resolution: int):
    if m == 1:
        return segment_samples(radius, resolution)
    if m == 2:
        return disk_samples(radius, resolution)
    raise ValueError("patch sampling implemented for m in {1, 2}")


# ---------------------------------------------------------------------------
# analytic generators


def gen_circle(radius: float, n_points: int) -> SampledSet:
    """Equi-arclength sample of a round circle with exact tangents."""
    if n_points < 3:
        raise ValueError("need at least 3 samples")
    t = 2.0 * math.pi * np.arange(n_points) / n_points
    points = radius * np.column_stack([np.cos(t), np.sin(t)])
    frames = tuple(
        Subspace(np.array([[-math.sin(a), math.cos(a)]])) for a in t
    )
    weights = np.full(n_points, 2.0 * math.pi * radius / n_points)
    return SampledSet(1, points, frames, weights)


def gen_ellipse(a: float, b: float, n_points: int) -> SampledSet:
    """Parametric sample of an axis-aligned ellipse, arc-length weights."""
    t = 2.0 * math.pi * np.arange(n_points) / n_points
    points = np.column_stack([a * np.cos(t), b * np.sin(t)])
    velocity = np.column_stack([-a * np.sin(t), b * np.cos(t)])
    speed = np.linalg.norm(velocity, axis=1)
    frames = tuple(Subspace([v / s]) for v, s in zip(velocity, speed))
    weights = speed * (2.0 * math.pi / n_points)
    return SampledSet(1, points, frames, weights)


def gen_sphere(radius: float, m: int, n_points: int) -> SampledSet:
    """Fibonacci-lattice sample of the round m-sphere (m = 2 only)."""
    if m != 2:
        raise ValueError("only the 2-sphere in R^3 is supported")
    if n_points < 8:
        raise ValueError("need at least 8 samples")
    k = np.arange(n_points)
    z = 1.0 - (2.0 * k + 1.0) / n_points
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, 1.0))
    phi = _GOLDEN_ANGLE * k
    normals = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    points = radius * normals
    frames = []
    for nrm in normals:
        # tangent plane = normal complement, built from a stable partner axis
        partner = np.eye(3)[int(np.argmin(np.abs(nrm)))]
        t1 = np.cross(nrm, partner)
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(nrm, t1)
        frames.append(Subspace(np.array([t1, t2])))
    weights = np.full(n_points, 4.0 * math.pi * radius**2 / n_points)
    return SampledSet(2, points, tuple(frames), weights)


def gen_torus(major: float, minor: float, n_points: int) -> SampledSet:
    """Grid sample of a torus of revolution in R^3, exact total area."""
    nu = max(8, int(round(math.sqrt(n_points))))
    nv = max(8, n_points // nu)
    u = 2.0 * math.pi * (np.arange(nu) + 0.5) / nu
    v = 2.0 * math.pi * (np.arange(nv) + 0.5) / nv
    uu, vv = np.meshgrid(u, v, indexing="ij")
    uu, vv = uu.ravel(), vv.ravel()
    ring = major + minor * np.cos(vv)
    points = np.column_stack([ring * np.cos(uu), ring * np.sin(uu), minor * np.sin(vv)])
    frames = []
    for a, b in zip(uu, vv):
        tu = np.array([-math.sin(a), math.cos(a), 0.0])
        tv = np.array(
            [-math.sin(b) * math.cos(a), -math.sin(b) * math.sin(a), math.cos(b)]
        )
        frames.append(Subspace(np.array([tu, tv])))
    cell = (2.0 * math.pi / nu) * (2.0 * math.pi / nv)
    weights = ring * minor * cell
    return SampledSet(2, points, tuple(frames), weights)


def gen_graph(
    base: Subspace,
    u: Callable[[np.ndarray], np.ndarray],
    du: Callable[[np.ndarray], np.ndarray],
    region: Sequence,
    h: float,
) -> SampledSet:
    """Sample the graph of u over a box region in base-plane coordinates.

    u maps m coordinates to n-m complement coordinates; du returns the
    (n-m) x m Jacobian. Weights carry the area factor sqrt(det(I+Du^T Du)).
    """
    m = base.dim
    if len(region) != m:
        raise ValueError("region must give one (lo, hi) interval per dimension")
    comp = base.complement_frame()
    axes = []
    for lo, hi in region:
        count = max(1, int(round((hi - lo) / h)))
        axes.append(lo + (np.arange(count) + 0.5) * (hi - lo) / count)
    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.column_stack([g.ravel() for g in grids])
    steps = [(hi - lo) / max(1, int(round((hi - lo) / h))) for lo, hi in region]
    cell = float(np.prod(steps))
    points, frames, weights = [], [], []
    for t in coords:
        ut = np.atleast_1d(np.asarray(u(t), float))
        jac = np.atleast_2d(np.asarray(du(t), float)).reshape(comp.shape[0], m)
        points.append(t @ base.frame + ut @ comp)
        frames.append(Subspace.from_spanning(base.frame + jac.T @ comp))
        weights.append(math.sqrt(np.linalg.det(np.eye(m) + jac.T @ jac)) * cell)
    return SampledSet(m, np.array(points), tuple(frames), np.array(weights))


def wedge_kappa(beta: float) -> float:
    """Scale factor for the dyadic witness balls on the wedge."""
    return beta / (4.0 * math.sqrt(1.0 + beta**2))


def wedge_witness_points(beta: float, level: int):
    """Witness pair on the two wedge sheets at dyadic depth `level`."""
    s = 2.0**-level
    p = s * np.array([1.0, beta, 0.0])
    q = s * np.array([-1.0, beta, 1.0])
    return p, q


def gen_wedge(beta: float, levels, pts_per_level: int = 200) -> SampledSet:
    """Sample the crease set {x e1 + beta|x| e2 + y e3} near the witness
    pairs of each dyadic level.

    Each level contributes a flat disk patch of radius kappa/2^level on
    either sheet, centered at the witness points, with exact planar mass.
    The crease line x = 0 is never touched: the patches stay a fixed
    fraction of 2^-level away from it.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if isinstance(levels, int):
        levels = range(1, levels + 1)
    kappa = wedge_kappa(beta)
    root = math.sqrt(1.0 + beta**2)
    frame_plus = Subspace(
        np.array([[1.0 / root, beta / root, 0.0], [0.0, 0.0, 1.0]])
    )
    frame_minus = Subspace(
        np.array([[-1.0 / root, beta / root, 0.0], [0.0, 0.0, 1.0]])
    )
    rings = max(4, int(round(math.sqrt(pts_per_level / 6.0))))
    points, frames, weights, labels = [], [], [], []
    for level in levels:
        p, q = wedge_witness_points(beta, level)
        eps = kappa * 2.0**-level
        coords, w = disk_samples(eps, rings)
        for center, frame, side in ((p, frame_plus, "+"), (q, frame_minus, "-")):
            patch = center + coords @ frame.frame
            points.append(patch)
            frames.extend([frame] * len(w))
            weights.append(w)
            labels.extend([f"L{level}{side}"] * len(w))
    return SampledSet(
        2,
        np.vstack(points),
        tuple(frames),
        np.concatenate(weights),
        tuple(labels),
    )


def _rotated_plane(m: int, n: int, angle: float) -> Subspace:
    """span{e1..em} with e1 rotated toward e_{m+1} by `angle`."""
    frame = np.eye(m, n)
    frame[0, 0] = math.cos(angle)
    frame[0, m] = math.sin(angle)
    return Subspace(frame)


def _two_sheet_set(
    m: int,
    radius_1: float,
    radius_2: float,
    offset: float,
    angle_2: float,
    resolution: int,
) -> SampledSet:
    n = m + 1
    base = Subspace(np.eye(m, n))
    tilted = _rotated_plane(m, n, angle_2)
    coords1, w1 = _patch_samples(m, radius_1, resolution)
    coords2, w2 = _patch_samples(m, radius_2, max(4, resolution // 2))
    q = np.zeros(n)
    q[m] = offset
    pts1 = coords1 @ base.frame
    pts2 = q + coords2 @ tilted.frame
    points = np.vstack([pts1, pts2])
    frames = tuple([base] * len(w1) + [tilted] * len(w2))
    weights = np.concatenate([w1, w2])
    labels = tuple(["sheet1"] * len(w1) + ["sheet2"] * len(w2))
    return SampledSet(m, points, frames, weights, labels)


def gen_parallel_sheets(
    delta: float,
    eps: float,
    big_radius: float,
    angle: float = 0.0,
    m: int = 2,
    resolution: int = 12,
) -> SampledSet:
    """Two nearly parallel flat patches: the witness configuration for the
    almost-parallel strand lower bound.

    Sheet 1 is a patch of radius 2*eps*R around the origin in its own
    plane; sheet 2 sits at vertical offset 2*delta*eps*R (exceeding the
    required delta*eps*R) with radius eps^2*R and plane angle `angle`.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if eps > delta / 500.0:
        raise ValueError("eps must not exceed delta / 500")
    offset = min(2.0 * delta * eps * big_radius, 0.9 * eps * big_radius)
    return _two_sheet_set(
        m, 2.0 * eps * big_radius, eps**2 * big_radius, offset, angle, resolution
    )


def gen_transversal_sheets(
    chi: float,
    eps: float,
    big_radius: float,
    delta: float = 0.5,
    m: int = 2,
    resolution: int = 16,
) -> SampledSet:
    """Two flat patches whose planes meet at angle >= chi: the witness
    configuration for the transversal strand lower bound. Sheet 1 spans
    the full radius R ball around the origin."""
    if not 0 < chi < 1:
        raise ValueError("chi must lie in (0, 1)")
    angle = math.asin(min(1.0, 1.1 * chi))
    offset = min(2.0 * delta * eps * big_radius, 0.9 * eps * big_radius)
    return _two_sheet_set(m, big_radius, eps**2 * big_radius, offset, angle, resolution)


def measured_mass_constant(s: SampledSet, center, radii) -> float:
    """min over radii of (mass in B_r(center)) / r^m, the empirical lower
    mass density of the sampled set at the given center."""
    m = s.intrinsic_dim
    best = math.inf
    for r in radii:
        idx = s.ball_indices(center, r)
        best = min(best, float(np.sum(s.weights[idx])) / r**m)
    return best


# ---------------------------------------------------------------------------
# serialization


def save_sampled_set(s: SampledSet, path) -> None:
    payload = {
        "format": FORMAT_TAG,
        "ambient_dim": s.ambient_dim,
        "intrinsic_dim": s.intrinsic_dim,
        "points": s.points.tolist(),
        "frames": None
        if s.frames is None
        else [fr.frame.tolist() for fr in s.frames],
        "weights": s.weights.tolist(),
        "labels": None if s.labels is None else list(s.labels),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_sampled_set(path) -> SampledSet:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != FORMAT_TAG:
        raise ValueError(f"unsupported format tag: {payload.get('format')!r}")
    for key in ("ambient_dim", "intrinsic_dim", "points", "weights"):
        if payload.get(key) is None:
            raise ValueError(f"missing field: {key}")
    points = np.asarray(payload["points"], float)
    if points.ndim != 2 or points.shape[1] != payload["ambient_dim"]:
        raise ValueError("points do not match ambient_dim")
    frames = None
    if payload.get("frames") is not None:
        frames = tuple(Subspace(np.asarray(fr, float)) for fr in payload["frames"])
    labels = payload.get("labels")
    return SampledSet(
        payload["intrinsic_dim"],
        points,
        frames,
        np.asarray(payload["weights"], float),
        None if labels is None else tuple(labels),
    )


def load_point_cloud_csv(path, intrinsic_dim: int) -> SampledSet:
    """Read a bare point cloud (one point per row, no header); frames are
    absent and weights default to 1."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append([float(v) for v in row])
    points = np.asarray(rows, float)
    return SampledSet(intrinsic_dim, points, None, np.ones(len(points)))
