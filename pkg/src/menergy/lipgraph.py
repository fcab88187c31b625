"""Lipschitz-graph analytics: shifting, tilted-plane coverage, tangent
angle bounds, quantitative graph intersection, the pointwise integrand
bound for C^2 graphs, and the fractional Sobolev seminorm.

A graph lives over a base plane F: u maps F-coordinates to complement
coordinates and the embedded point is anchor + t F + u(t) F_perp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .conformal import PointPlanePair, numerator_ltau
from .energy import EnergyConfig, energy
from .grassmann import Subspace, angle_metric, principal_angles
from .sampled_sets import gen_graph


@dataclass(frozen=True)
class GraphDescriptor:
    """A Lipschitz graph over a base plane, anchored at a point."""

    base_plane: Subspace
    evaluator: Callable[[np.ndarray], np.ndarray]
    lip_bound: float
    anchor: np.ndarray
    derivative_evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian_bound: Optional[float] = None

    def __post_init__(self) -> None:
        if self.lip_bound < 0:
            raise ValueError("Lipschitz bound must be nonnegative")
        anchor = np.asarray(self.anchor, float)
        if anchor.shape != (self.base_plane.ambient_dim,):
            raise ValueError("anchor dimension does not match the plane")
        origin = np.linalg.norm(self.value(np.zeros(self.base_plane.dim)))
        if origin > 1e-12:
            raise ValueError("graph must vanish at the anchor, u(0) = 0")
        object.__setattr__(self, "anchor", anchor)

    @property
    def domain_dim(self) -> int:
        return self.base_plane.dim

    @property
    def codomain_dim(self) -> int:
        return self.base_plane.ambient_dim - self.base_plane.dim

    def normal_frame(self) -> np.ndarray:
        return self.base_plane.complement_frame()

    def value(self, t) -> np.ndarray:
        out = np.asarray(self.evaluator(np.asarray(t, float)), float)
        return np.atleast_1d(out)

    def derivative(self, t) -> np.ndarray:
        if self.derivative_evaluator is None:
            raise ValueError("graph has no derivative evaluator")
        out = np.asarray(self.derivative_evaluator(np.asarray(t, float)), float)
        return np.atleast_2d(out).reshape(self.codomain_dim, self.domain_dim)

    def point(self, t) -> np.ndarray:
        t = np.asarray(t, float)
        return self.anchor + t @ self.base_plane.frame + self.value(t) @ self.normal_frame()

    def tangent_plane(self, t) -> Subspace:
        jac = self.derivative(t)
        return Subspace.from_spanning(
            self.base_plane.frame + jac.T @ self.normal_frame()
        )


def shift_graph(g: GraphDescriptor, x) -> GraphDescriptor:
    """Rebase the same graph at another of its points.

    The new evaluator is u(y + xi) - u(xi) where xi are the base-plane
    coordinates of x; the Lipschitz bound is unchanged.
    """
    x = np.asarray(x, float)
    xi = g.base_plane.coords(x - g.anchor)
    height = (x - g.anchor) @ g.normal_frame().T
    if np.linalg.norm(g.value(xi) - height) > 1e-10 * max(1.0, np.linalg.norm(x)):
        raise ValueError("point does not lie on the graph")
    u_xi = g.value(xi)
    shifted = lambda y: g.value(np.asarray(y, float) + xi) - u_xi
    dshift = None
    if g.derivative_evaluator is not None:
        dshift = lambda y: g.derivative(np.asarray(y, float) + xi)
    return replace(
        g, evaluator=shifted, derivative_evaluator=dshift, anchor=g.point(xi)
    )


def tilting_coverage_check(
    g: GraphDescriptor,
    target_plane: Subspace,
    chi: float,
    rho: float,
    grid: float,
):
    """Check that the disk of radius (1 - sigma) rho / sqrt(1 + lip^2)
    in the tilted plane is covered by the projection of the graph piece
    inside B_rho, with sigma = chi (1 + lip).

    Returns (ok, worst_residual). Preimages are found by fixed-point
    iteration on the base coordinates, contraction factor sigma.
    """
    lip = g.lip_bound
    sigma = chi * (1.0 + lip)
    if sigma >= 1.0:
        raise ValueError("sigma = chi (1 + lip) must be below 1")
    if angle_metric(g.base_plane, target_plane) > chi + 1e-12:
        raise ValueError("plane angle exceeds chi")
    covered = (1.0 - sigma) * rho / math.sqrt(1.0 + lip**2)
    steps = max(1, int(math.floor(covered / grid)))
    axis = np.linspace(-covered, covered, 2 * steps + 1)
    grids = np.meshgrid(*([axis] * target_plane.dim), indexing="ij")
    coords = np.column_stack([a.ravel() for a in grids])
    coords = coords[np.linalg.norm(coords, axis=1) <= covered]
    worst = 0.0
    ok = True
    for c in coords:
        target = c @ target_plane.frame
        t = g.base_plane.coords(target)
        residual = math.inf
        for _ in range(500):
            w = t @ g.base_plane.frame + g.value(t) @ g.normal_frame()
            gap = target - target_plane.project(w)
            residual = float(np.linalg.norm(gap))
            if residual < 1e-9 * max(rho, 1.0):
                break
            t = t + g.base_plane.coords(gap)
        worst = max(worst, residual)
        inside = np.linalg.norm(
            t @ g.base_plane.frame + g.value(t) @ g.normal_frame()
        ) <= rho * (1.0 + 1e-9)
        if residual > 1e-6 * rho or not inside:
            ok = False
    return ok, worst


def graph_angle_bounds(g: GraphDescriptor, x, y):
    """Tangent-plane angle between two graph points and its sandwich:
    angle <= |Du(x) - Du(y)| <= sqrt((1+b^2)/(1-b^2)) * angle."""
    if g.lip_bound >= 1.0:
        raise ValueError("sandwich requires lip bound below 1")
    ang = angle_metric(g.tangent_plane(x), g.tangent_plane(y))
    jac_gap = float(
        np.linalg.norm(g.derivative(x) - g.derivative(y), ord=2)
    )
    b = g.lip_bound
    upper = math.sqrt((1.0 + b * b) / (1.0 - b * b)) * ang
    return ang, jac_gap, upper


def intersect_graphs(
    ga: GraphDescriptor,
    gb: GraphDescriptor,
    chi: float,
    sigma: float,
    seeds: int = 9,
    extent: float = 0.5,
):
    """Locate sampled intersection points of two graphs and verify the
    projection inequality |P_Y d| <= C |P_X d| with C = 5/(chi - 8 sigma).

    X spans the principal directions of (F, G) with sin angle below chi;
    Y is its orthogonal complement. Returns (X or None, j, C, verified,
    intersection points).
    """
    if not 0 <= sigma < chi / 8.0 < 1.0 / 8.0:
        raise ValueError("need 0 <= sigma < chi/8 < 1/8")
    if np.linalg.norm(ga.anchor - gb.anchor) > 1e-10:
        raise ValueError("graphs must share their anchor")
    f, g = ga.base_plane, gb.base_plane
    dec = principal_angles(f, g)
    sines = np.sin(dec.angles)
    j = int(np.count_nonzero(sines < chi))
    c_val = 5.0 / (chi - 8.0 * sigma)
    anchor = ga.anchor
    n = f.ambient_dim
    points = [anchor]
    if j > 0:
        x_plane = Subspace.from_spanning(dec.left_vectors[:j])
        seeds_axis = np.linspace(-extent, extent, seeds)
        grids = np.meshgrid(*([seeds_axis] * j), indexing="ij")
        seed_coords = np.column_stack([a.ravel() for a in grids])
        for sc in seed_coords:
            z = anchor + sc @ x_plane.frame
            converged = False
            for _ in range(400):
                pa = ga.point(f.coords(z - anchor))
                pb = gb.point(g.coords(z - anchor))
                gap = float(np.linalg.norm(pa - pb))
                z_next = 0.5 * (pa + pb)
                if gap < 1e-11 * max(1.0, extent):
                    converged = True
                    z = z_next
                    break
                z = z + 0.7 * (z_next - z)
            if converged and all(
                np.linalg.norm(z - q) > 1e-8 for q in points
            ):
                points.append(z)
    else:
        x_plane = None
    verified = True
    if x_plane is not None and len(points) > 1:
        pts = np.asarray(points)
        projector_x = x_plane.frame.T @ x_plane.frame
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                d = pts[b] - pts[a]
                dx = projector_x @ d
                dy = d - dx
                if np.linalg.norm(dy) > c_val * np.linalg.norm(dx) + 1e-12:
                    verified = False
    return x_plane, j, c_val, verified, np.asarray(points)


def c2_bound_constant(tau: float, m: int) -> float:
    """Constant in the pointwise integrand bound for C^2 graphs."""
    p = (1.0 + tau) * m
    return 2.0 ** (p - 1.0) * (1.0 + 2.0**p)


def c2_integrand_bound(
    g: GraphDescriptor, x, y, tau: float, m: int, big_n: float
):
    """Compare the integrand at a pair of graph points against the C^2
    bound C |D2u|^((1+tau)m) |p-q|^((tau-1)m). Returns (lhs, rhs, ok)."""
    if g.hessian_bound is None:
        raise ValueError("graph needs a Hessian bound")
    if tau < 1.0 / m - 1.0:
        raise ValueError("need tau >= 1/m - 1")
    p = g.point(x)
    q = g.point(y)
    if max(np.linalg.norm(p - g.anchor), np.linalg.norm(q - g.anchor)) > big_n:
        raise ValueError("points outside the stated ball")
    pair = PointPlanePair(p, q, g.tangent_plane(x), g.tangent_plane(y))
    dist = float(np.linalg.norm(p - q))
    lhs = numerator_ltau(pair, tau, m) / dist ** (2 * m)
    rhs = (
        c2_bound_constant(tau, m)
        * g.hessian_bound ** ((1.0 + tau) * m)
        * dist ** ((tau - 1.0) * m)
    )
    return lhs, rhs, lhs <= rhs * (1.0 + 1e-9)


def _norm_of(value) -> float:
    arr = np.asarray(value, float)
    if arr.ndim <= 1:
        return float(np.linalg.norm(arr))
    return float(np.linalg.norm(arr, ord=2))


def sobolev_seminorm(
    du: Callable,
    region: Sequence,
    s: float,
    rho: float,
    grid: int,
) -> float:
    """Gagliardo seminorm of du: the double integral of
    |du(x) - du(y)|^rho / |x - y|^(m + s rho) over region x region,
    raised to 1/rho. Midpoint tensor quadrature, exact-diagonal pairs
    excluded (their contribution vanishes at the quadrature's order for
    Lipschitz du)."""
    if not 0 < s < 1:
        raise ValueError("need s in (0, 1)")
    if rho < 1:
        raise ValueError("need rho >= 1")
    m = len(region)
    axes, steps = [], []
    for lo, hi in region:
        h = (hi - lo) / grid
        axes.append(lo + (np.arange(grid) + 0.5) * h)
        steps.append(h)
    grids = np.meshgrid(*axes, indexing="ij")
    nodes = np.column_stack([a.ravel() for a in grids])
    cell = float(np.prod(steps))
    samples = [np.asarray(du(t), float) for t in nodes]
    flat = np.array([np.ravel(v) for v in samples])
    is_matrix = np.asarray(samples[0]).ndim >= 2
    total = 0.0
    k = len(nodes)
    for a in range(k):
        d = nodes[a + 1 :] - nodes[a]
        dist = np.linalg.norm(np.atleast_2d(d), axis=1)
        if is_matrix:
            gaps = np.array(
                [
                    np.linalg.norm(samples[b] - samples[a], ord=2)
                    for b in range(a + 1, k)
                ]
            )
        else:
            gaps = np.linalg.norm(flat[a + 1 :] - flat[a], axis=1)
        total += 2.0 * float(
            np.sum(gaps**rho / dist ** (m + s * rho))
        )
    return (total * cell * cell) ** (1.0 / rho)


def sobolev_sufficiency_check(
    g: GraphDescriptor, tau: float, r: float, grid: int
):
    """Ratio of the sampled graph energy to the Sobolev seminorm power
    [Du]^((1+tau)m), the quantity the sufficiency bound controls.

    Returns (energy value, seminorm power, ratio); a flat graph gives
    (0, 0, 0) by convention.
    """
    if tau <= 0:
        raise ValueError("need tau > 0")
    m = g.domain_dim
    half = r / math.sqrt(m)
    region = [(-half, half)] * m
    h = 2.0 * half / grid
    patch = gen_graph(
        g.base_plane,
        lambda t: g.value(t),
        lambda t: g.derivative(t),
        region,
        h,
    )
    value = energy(patch, EnergyConfig(tau=tau, kernel="ltau")).value
    s_exp = 1.0 / (1.0 + tau)
    rho = (1.0 + tau) * m
    semi = sobolev_seminorm(lambda t: g.derivative(t), region, s_exp, rho, grid)
    power = semi**rho
    if power == 0.0:
        return value, 0.0, 0.0
    return value, power, value / power
