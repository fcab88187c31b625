"""Flatness numbers, plane fitting, admissibility probes, and local
graph extraction for sampled sets.

beta measures how far samples stray from a plane; the coverage defect
measures how much of the plane's disk misses the samples; theta is the
max of the two. All suprema are discrete and every report carries the
grid resolution so callers can budget slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .grassmann import Subspace, affine_project, angle_metric, cone_contains
from .sampled_sets import SampledSet


class EmptyBallError(ValueError):
    """No samples inside the probed ball."""


class NotAGraphError(ValueError):
    """The samples are not a graph over the chosen plane."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def _ball(s: SampledSet, p, r: float) -> np.ndarray:
    idx = s.ball_indices(p, r)
    if len(idx) == 0:
        raise EmptyBallError(f"no samples in the ball of radius {r}")
    return idx


def dist_to_clipped_disk(p, f: Subspace, r: float, y) -> float:
    """Distance from y to the disk (p + F) intersected with B_r(p)."""
    v = np.asarray(y, float) - np.asarray(p, float)
    tangential = f.project(v)
    normal2 = float(np.dot(v - tangential, v - tangential))
    overshoot = max(0.0, float(np.linalg.norm(tangential)) - r)
    return math.sqrt(normal2 + overshoot**2)


def beta_wrt_plane(s: SampledSet, p, f: Subspace, r: float) -> float:
    """sup over samples in B_r(p) of dist to the clipped disk, over r."""
    if r <= 0:
        raise ValueError("radius must be positive")
    idx = _ball(s, p, r)
    v = s.points[idx] - np.asarray(p, float)
    tangential = (v @ f.frame.T) @ f.frame
    normal2 = np.sum((v - tangential) ** 2, axis=1)
    overshoot = np.maximum(0.0, np.linalg.norm(tangential, axis=1) - r)
    return float(np.max(np.sqrt(normal2 + overshoot**2))) / r


def _disk_grid(m: int, r: float, step: float) -> np.ndarray:
    """Lattice of the m-ball of radius r, coordinates only, shape (K, m)."""
    k = int(math.floor(r / step))
    axis = step * np.arange(-k, k + 1)
    grids = np.meshgrid(*([axis] * m), indexing="ij")
    coords = np.column_stack([g.ravel() for g in grids])
    return coords[np.linalg.norm(coords, axis=1) <= r]


def coverage_defect(s: SampledSet, p, f: Subspace, r: float, grid: float) -> float:
    """sup over a grid of (p + F) cap B_r(p) of the distance to the
    samples in B_r(p), over r. Empty ball gives 1 by convention."""
    if grid > r / 16 + 1e-15:
        raise ValueError("grid step must be at most r/16")
    idx = s.ball_indices(p, r)
    if len(idx) == 0:
        return 1.0
    targets = np.asarray(p, float) + _disk_grid(f.dim, r, grid) @ f.frame
    samples = s.points[idx]
    worst = 0.0
    for k in range(0, len(targets), 256):
        chunk = targets[k : k + 256]
        d = np.linalg.norm(chunk[:, None, :] - samples[None, :, :], axis=2)
        worst = max(worst, float(np.max(np.min(d, axis=1))))
    return worst / r


def theta(s: SampledSet, p, f: Subspace, r: float, grid: float) -> float:
    """Bilateral flatness number: max of beta and the coverage defect."""
    return max(beta_wrt_plane(s, p, f, r), coverage_defect(s, p, f, r, grid))


def _rotate_frame(frame: np.ndarray, comp: np.ndarray, i: int, j: int, ang: float):
    out = frame.copy()
    out[i] = math.cos(ang) * frame[i] + math.sin(ang) * comp[j]
    return out


def _descend(s, p, r, current, best):
    m = current.dim
    step = 0.2
    while step >= 1e-4:
        improved = False
        comp = current.complement_frame()
        if comp.shape[0] == 0:
            break
        for i in range(m):
            for j in range(comp.shape[0]):
                for sign in (1.0, -1.0):
                    cand = Subspace.from_spanning(
                        _rotate_frame(current.frame, comp, i, j, sign * step)
                    )
                    val = beta_wrt_plane(s, p, cand, r)
                    if val < best - 1e-15:
                        best, current, improved = val, cand, True
                        comp = current.complement_frame()
        if not improved:
            step *= 0.5
    return current, best


def best_plane(s: SampledSet, p, r: float, m: int):
    """Plane through p minimizing beta over B_r(p), with its beta.

    Weighted-PCA seed plus a few fixed-seed random restarts, each
    refined by coordinate descent over rotations of every frame vector
    toward every complement direction, then polished with shrinking
    random rotations. The objective is a max over samples, hence
    nonsmooth; the restarts and the randomized polish step past the
    kinks that stall pure coordinate descent.
    """
    idx = _ball(s, p, r)
    if len(idx) < m + 1:
        raise ValueError("need at least m + 1 samples in the ball")
    v = s.points[idx] - np.asarray(p, float)
    w = s.weights[idx]
    cov = (v * w[:, None]).T @ v
    eigval, eigvec = np.linalg.eigh(cov)
    frame = eigvec[:, np.argsort(eigval)[::-1][:m]].T
    seed = Subspace.from_spanning(frame)
    current, best = _descend(s, p, r, seed, beta_wrt_plane(s, p, seed, r))
    rng = np.random.Generator(np.random.PCG64(0))
    n = s.ambient_dim
    for _ in range(6):
        cand = Subspace.from_spanning(rng.standard_normal((m, n)))
        cand, val = _descend(s, p, r, cand, beta_wrt_plane(s, p, cand, r))
        if val < best:
            best, current = val, cand
    for _ in range(2):
        for scale in (0.1, 0.03, 0.01, 0.003, 0.001, 3e-4, 1e-4):
            for _ in range(60):
                cand = Subspace.from_spanning(
                    current.frame + scale * rng.standard_normal((m, n))
                )
                val = beta_wrt_plane(s, p, cand, r)
                if val < best - 1e-15:
                    best, current = val, cand
        current, best = _descend(s, p, r, current, best)
    return current, best


@dataclass(frozen=True)
class FlatnessEntry:
    point_index: int
    radius: float
    beta: float
    coverage_defect: float
    theta: float
    best_plane: Subspace

    def as_dict(self) -> dict:
        return {
            "point_index": self.point_index,
            "radius": self.radius,
            "beta": self.beta,
            "coverage_defect": self.coverage_defect,
            "theta": self.theta,
            "best_plane": self.best_plane.frame.tolist(),
        }


@dataclass(frozen=True)
class FlatnessReport:
    entries: tuple
    delta: float
    grid: float
    verdict: bool

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "grid": self.grid,
            "verdict": self.verdict,
            "entries": [e.as_dict() for e in self.entries],
        }


def reifenberg_report(
    s: SampledSet,
    point_indices: Sequence[int],
    radii: Sequence[float],
    delta: float,
    grid_fraction: float = 1.0 / 16.0,
) -> FlatnessReport:
    """Fit the best plane at each (point, radius) and record whether the
    bilateral flatness number stays at or below delta throughout."""
    radii = list(radii)
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    m = s.intrinsic_dim
    entries = []
    verdict = True
    for i in point_indices:
        p = s.points[i]
        for r in radii:
            plane, beta = best_plane(s, p, r, m)
            grid = grid_fraction * r
            defect = coverage_defect(s, p, plane, r, grid)
            th = max(beta, defect)
            verdict = verdict and th <= delta
            entries.append(FlatnessEntry(int(i), r, beta, defect, th, plane))
    grid = grid_fraction * radii[-1]
    return FlatnessReport(tuple(entries), delta, grid, verdict)


@dataclass(frozen=True)
class ProbeReport:
    coverage_pass: bool
    mass_pass: bool
    coverage_margin: float      # worst projection gap minus tolerance
    mass_margin: float          # worst (mass - c r^m) / r^m
    grid_step: float
    dyadic_radii: tuple
    witness: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.coverage_pass and self.mass_pass

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "coverage_pass": self.coverage_pass,
            "mass_pass": self.mass_pass,
            "coverage_margin": self.coverage_margin,
            "mass_margin": self.mass_margin,
            "grid_step": self.grid_step,
            "dyadic_radii": list(self.dyadic_radii),
            "witness": self.witness,
        }


def admissibility_probe(
    s: SampledSet,
    p,
    h: Subspace,
    alpha: float,
    big_m: float,
    big_r: float,
    c: float,
    dyadic_levels: int = 3,
    grid_step: Optional[float] = None,
    scale_divisor: float = 10.0,
) -> ProbeReport:
    """Two-clause admissibility test at a base point.

    Clause (a): every grid point of the disk (p + H) cap B_R(p) is the
    projection of some sample in the cone C_p(alpha, H), up to the grid
    tolerance. Clause (b): around each such sample, every dyadic ball of
    radius R / scale_divisor / 2^k carries weight at least c r^m from
    samples whose planes stay within angle M alpha of H.
    """
    if s.frames is None:
        raise ValueError("admissibility probe needs tangent frames")
    p = np.asarray(p, float)
    step = big_r / 8.0 if grid_step is None else grid_step
    m = s.intrinsic_dim
    in_cone = np.array(
        [cone_contains(p, alpha, h, y) for y in s.points], dtype=bool
    )
    cone_pts = s.points[np.nonzero(in_cone)[0]]
    cone_proj = (
        np.asarray([affine_project(p, h, y) for y in cone_pts])
        if len(cone_pts)
        else np.zeros((0, s.ambient_dim))
    )
    targets = p + _disk_grid(h.dim, big_r, step) @ h.frame
    coverage_pass = True
    worst_gap = 0.0
    witness = None
    anchors = []
    for x in targets:
        if len(cone_pts) == 0:
            coverage_pass = False
            witness = {"clause": "coverage", "target": x.tolist()}
            break
        gaps = np.linalg.norm(cone_proj - x, axis=1)
        k = int(np.argmin(gaps))
        worst_gap = max(worst_gap, float(gaps[k]))
        if gaps[k] > step * (1.0 + 1e-9):
            coverage_pass = False
            if witness is None:
                witness = {"clause": "coverage", "target": x.tolist()}
        else:
            anchors.append(cone_pts[k])
    angles = np.array([angle_metric(fr, h) for fr in s.frames])
    aligned = angles < big_m * alpha
    radii = tuple(
        big_r / scale_divisor / 2.0**k for k in range(dyadic_levels)
    )
    mass_pass = True
    mass_margin = math.inf
    for eta in anchors:
        d = np.linalg.norm(s.points - eta, axis=1)
        for r in radii:
            mass = float(np.sum(s.weights[(d < r) & aligned]))
            margin = (mass - c * r**m) / r**m
            mass_margin = min(mass_margin, margin)
            if margin < 0 and mass_pass:
                mass_pass = False
                if witness is None:
                    witness = {
                        "clause": "mass",
                        "anchor": np.asarray(eta).tolist(),
                        "radius": r,
                        "mass": mass,
                    }
    if not anchors:
        mass_pass = False
        mass_margin = -math.inf
    return ProbeReport(
        coverage_pass,
        mass_pass,
        worst_gap - step,
        mass_margin if math.isfinite(mass_margin) else -1.0,
        step,
        radii,
        witness,
    )


def injectivity_check(
    s: SampledSet, p, f: Subspace, r: float, angle_bound: float = 0.0
):
    """Whether projection onto p + F separates the samples of B_r(p).

    Returns (injective, witness pair or None, hypothesis_ok) where the
    hypothesis is that every sample plane satisfies angle + bound < 1.
    """
    idx = _ball(s, p, r)
    coords = (s.points[idx] - np.asarray(p, float)) @ f.frame.T
    tol = 1e-6 * r
    witness = None
    injective = True
    for a in range(len(idx)):
        gaps = np.linalg.norm(coords[a + 1 :] - coords[a], axis=1)
        hit = np.nonzero(gaps <= tol)[0]
        if hit.size:
            injective = False
            witness = (int(idx[a]), int(idx[a + 1 + hit[0]]))
            break
    hypothesis_ok = True
    if s.frames is not None:
        hypothesis_ok = all(
            angle_metric(s.frames[i], f) + angle_bound < 1.0 for i in idx
        )
    return injective, witness, hypothesis_ok


@dataclass(frozen=True)
class DiscreteGraph:
    """Graph values over projected sample sites in base-plane coordinates."""

    base_plane: Subspace
    anchor: np.ndarray
    sites: np.ndarray      # (K, m) coordinates in the base plane
    values: np.ndarray     # (K, n - m) coordinates in the complement
    lip: float


def extract_local_graph(
    s: SampledSet,
    p,
    r: float,
    delta: float,
    plane: Optional[Subspace] = None,
) -> DiscreteGraph:
    """Represent the samples of B_r(p) as a discrete graph over a plane.

    The plane defaults to the best-fit plane at scale r. Raises
    NotAGraphError with a witness pair when projection is not injective.
    """
    p = np.asarray(p, float)
    if plane is None:
        plane, _ = best_plane(s, p, r, s.intrinsic_dim)
    injective, witness, _ = injectivity_check(s, p, plane, r, delta)
    if not injective:
        raise NotAGraphError("projection collision inside the ball", witness)
    idx = _ball(s, p, r)
    v = s.points[idx] - p
    sites = v @ plane.frame.T
    comp = plane.complement_frame()
    values = v @ comp.T
    lip = 0.0
    for a in range(len(idx)):
        ds = np.linalg.norm(sites[a + 1 :] - sites[a], axis=1)
        dv = np.linalg.norm(values[a + 1 :] - values[a], axis=1)
        good = ds > 0
        if np.any(good):
            lip = max(lip, float(np.max(dv[good] / ds[good])))
    return DiscreteGraph(plane, p, sites, values, lip)
