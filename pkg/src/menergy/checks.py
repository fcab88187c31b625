"""Seeded property suites behind the `check` CLI subcommand.

Each suite returns a list of property records {suite, property, passed,
margin}. Margins are the worst observed slack: nonnegative means the
property held with room to spare. All randomness flows from one seeded
generator so reports are byte-identical across reruns and thread counts.
"""

from __future__ import annotations

import math

import numpy as np

from . import conformal, flatness, grassmann, lipgraph, sampled_sets
from .energy import (
    EnergyConfig,
    cross_energy,
    energy as compute_energy,
    integrand_matrix,
)
from .grassmann import Subspace, angle_metric, principal_angles, random_subspace

SUITES = ("grassmann", "conformal", "energy", "flatness", "lipgraph")


def _record(suite, name, passed, margin):
    return {
        "suite": suite,
        "property": name,
        "passed": bool(passed),
        "margin": float(margin),
    }


def _random_pair(rng):
    n = int(rng.integers(2, 9))
    m = int(rng.integers(1, min(n, 4) + 1))
    return random_subspace(rng, n, m), random_subspace(rng, n, m)


def check_grassmann(rng, threads=1):
    out = []

    worst = 0.0
    for _ in range(300):
        f, g = _random_pair(rng)
        ang = angle_metric(f, g)
        sin_max = math.sin(float(principal_angles(f, g).angles[-1]))
        worst = max(worst, abs(ang - sin_max))
    out.append(_record("grassmann", "angle_equals_sin_max", worst <= 1e-10, 1e-10 - worst))

    worst = 0.0
    for _ in range(200):
        f, g = _random_pair(rng)
        pf, pg = grassmann.projector(f), grassmann.projector(g)
        eye = np.eye(pf.shape[0])
        exprs = [
            np.linalg.norm(pf - pg, 2),
            np.linalg.norm((eye - pf) - (eye - pg), 2),
            np.linalg.norm((eye - pf) @ pg, 2),
            np.linalg.norm(pf @ (eye - pg), 2),
            np.linalg.norm((eye - pg) @ pf, 2),
            np.linalg.norm(pg @ (eye - pf), 2),
        ]
        worst = max(worst, max(exprs) - min(exprs))
    out.append(_record("grassmann", "projector_norm_identities", worst <= 1e-10, 1e-10 - worst))

    slack = math.inf
    for _ in range(300):
        f, g = _random_pair(rng)
        m = f.dim
        dec = principal_angles(f, g)
        sin_m = math.sin(float(dec.angles[-1]))
        combined = grassmann.combined_angle(f, g)
        sin_c = math.sin(combined)
        one_minus = 1.0 - math.cos(combined)
        slack = min(slack, sin_c - sin_m, math.sqrt(m) * sin_m - sin_c)
        for tau in (0.0, 0.5):
            slack = min(slack, sin_c ** ((1.0 + tau) * m) - one_minus**m)
        slack = min(slack, one_minus**m - 2.0**-m * sin_c ** (2 * m))
        slack = min(slack, sin_c ** (2 * m) - one_minus**m)
        for tau in (1.5, 3.0):
            c = conformal.angle_power_lower_constant(tau, m)
            slack = min(slack, one_minus**m - c * sin_c ** ((1.0 + tau) * m))
    out.append(_record("grassmann", "angle_chain", slack >= -1e-12, slack + 1e-12))

    slack = math.inf
    for _ in range(2000):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, n))
        f = random_subspace(rng, n, m)
        chi = float(rng.uniform(0.0, 0.45))
        sigma = float(rng.uniform(0.0, 0.8))
        if (1.0 + sigma) * chi >= 0.99:
            continue
        # tilt f by an angle with sine at most chi
        comp = f.complement_frame()
        ang = math.asin(chi * float(rng.uniform(0.0, 1.0)))
        frame = f.frame.copy()
        frame[0] = math.cos(ang) * frame[0] + math.sin(ang) * comp[0]
        g = Subspace.from_spanning(frame)
        kappa = grassmann.cone_lemma_bound(chi, sigma)
        t = rng.standard_normal(m)
        normal_dir = comp.T @ rng.standard_normal(comp.shape[0])
        if np.linalg.norm(normal_dir) > 0:
            normal_dir /= np.linalg.norm(normal_dir)
        z = t @ f.frame + sigma * np.linalg.norm(t) * float(
            rng.uniform(0.0, 1.0)
        ) * normal_dir
        tangential = np.linalg.norm(g.project(z))
        normal = np.linalg.norm(z - g.project(z))
        slack = min(slack, kappa * tangential - normal)
    out.append(_record("grassmann", "cone_lemma", slack >= -1e-10, slack + 1e-10))

    slack = math.inf
    for _ in range(200):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, n + 1))
        f, g, h = (random_subspace(rng, n, m) for _ in range(3))
        slack = min(
            slack,
            angle_metric(f, h) + angle_metric(h, g) - angle_metric(f, g),
        )
    out.append(_record("grassmann", "triangle_inequality", slack >= -1e-10, slack + 1e-10))
    return out


def _random_pair_config(rng, n, m):
    x = rng.standard_normal(n)
    y = rng.standard_normal(n)
    while np.linalg.norm(x - y) < 1e-3:
        y = rng.standard_normal(n)
    hx = random_subspace(rng, n, m)
    hy = random_subspace(rng, n, m)
    return conformal.PointPlanePair(x, y, hx, hy)


def check_conformal(rng, threads=1):
    out = []

    worst = 0.0
    for _ in range(300):
        n = int(rng.integers(2, 7))
        x, y, z = (rng.standard_normal(n) for _ in range(3))
        if np.linalg.norm(x - y) < 1e-6:
            continue
        r = conformal.reflect(x, y, z)
        worst = max(worst, float(np.linalg.norm(conformal.reflect(x, y, r) - z)))
        worst = max(worst, abs(np.linalg.norm(r) - np.linalg.norm(z)))
    out.append(_record("conformal", "reflect_involution_isometry", worst <= 1e-12, 1e-12 - worst))

    worst = 0.0
    for _ in range(300):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, n))
        pair = _random_pair_config(rng, n, m)
        worst = max(
            worst,
            abs(
                conformal.conformal_angle(pair)
                - conformal.conformal_angle(pair.swapped())
            ),
        )
    out.append(_record("conformal", "angle_symmetry", worst <= 1e-10, 1e-10 - worst))

    worst_over = 0.0
    worst_gap = 0.0
    for _ in range(40):
        pair = _random_pair_config(rng, 3, 1)
        num = conformal.numerator_ltau(pair, 1.0, 1)
        best = 0.0
        for t in np.linspace(0.0, math.pi, 721):
            e = math.cos(t) * pair.hx.frame[0] + math.sin(t) * (
                pair.hx.frame[0][::-1] * np.array([1.0, -1.0, 0.0])
            )
            e = pair.hx.project(e)
            nrm = np.linalg.norm(e)
            if nrm < 1e-12:
                continue
            val = conformal.pointwise_ftau(
                pair.x, pair.y, pair.hy, e / nrm, 1.0, 1
            )
            worst_over = max(worst_over, val - num)
            best = max(best, val)
        worst_gap = max(worst_gap, num - best)
    ok = worst_over <= 1e-10 and worst_gap <= 1e-2
    out.append(_record("conformal", "sup_formulation", ok, 1e-2 - max(worst_gap, worst_over)))

    slack = math.inf
    for _ in range(300):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, n))
        pair = _random_pair_config(rng, n, m)
        l1 = conformal.numerator_ltau(pair, 1.0, m)
        ks = conformal.numerator_ks(pair, m)
        slack = min(slack, ks - 2.0**-m * l1, float(m) ** m * l1 - ks)
    out.append(_record("conformal", "pointwise_comparison", slack >= -1e-12, slack + 1e-12))

    worst = 0.0
    for _ in range(100):
        pair = _random_pair_config(rng, 3, 1)
        base = conformal.numerator_ltau(pair, 1.0, 1)
        q = np.linalg.qr(rng.standard_normal((3, 3)))[0]
        sim = sampled_sets.Similarity(q, 2.0, rng.standard_normal(3))
        moved = conformal.PointPlanePair(
            sim.apply(pair.x),
            sim.apply(pair.y),
            Subspace(pair.hx.frame @ q.T),
            Subspace(pair.hy.frame @ q.T),
        )
        worst = max(worst, abs(conformal.numerator_ltau(moved, 1.0, 1) - base))
        center = pair.x + np.array([5.0, 0.0, 0.0])
        inv = sampled_sets.SphereInversion(center, 1.0)

        def push(point, plane):
            u = (point - center) / np.linalg.norm(point - center)
            return Subspace(plane.frame - 2.0 * np.outer(plane.frame @ u, u))

        inverted = conformal.PointPlanePair(
            inv.apply(pair.x),
            inv.apply(pair.y),
            push(pair.x, pair.hx),
            push(pair.y, pair.hy),
        )
        worst = max(worst, abs(conformal.numerator_ltau(inverted, 1.0, 1) - base))
    out.append(_record("conformal", "mobius_pair_invariance", worst <= 1e-8, 1e-8 - worst))
    return out


def check_energy(rng, threads=1):
    out = []
    cfg = EnergyConfig(tau=1.0, kernel="ltau", parallel_blocks=threads)

    pts = np.array([[0.0, 0.0], [1.0, 0.0]])
    frames = (Subspace([[1.0, 0.0]]), Subspace([[0.0, 1.0]]))
    two = sampled_sets.SampledSet(1, pts, frames, np.array([2.0, 3.0]))
    rep = compute_energy(two, cfg)
    mat = integrand_matrix(two, cfg)
    expected = 2.0 * 3.0 * (mat[0, 1] + mat[1, 0])
    out.append(
        _record(
            "energy",
            "two_point_formula",
            abs(rep.value - expected) <= 1e-12,
            1e-12 - abs(rep.value - expected),
        )
    )

    circ = sampled_sets.gen_circle(1.0, 128)
    val = compute_energy(circ, cfg).value
    out.append(_record("energy", "circle_nullity", val <= 1e-10, 1e-10 - val))

    torus = sampled_sets.gen_torus(2.0, 0.7, 200)
    full = compute_energy(torus, cfg)
    everything = (np.zeros(3), 100.0)
    ordered = cross_energy(torus, everything, everything, cfg)
    rel = abs(full.value - ordered.value) / full.value
    out.append(_record("energy", "symmetrized_consistency", rel <= 1e-12, 1e-12 - rel))

    mat_l = integrand_matrix(torus, cfg)
    mat_ks = integrand_matrix(torus, EnergyConfig(tau=1.0, kernel="ks"))
    m = torus.intrinsic_dim
    slack = float(
        min(
            np.min(mat_ks - 2.0**-m * mat_l),
            np.min(float(m) ** m * mat_l - mat_ks),
        )
    )
    out.append(_record("energy", "kernel_comparison_termwise", slack >= -1e-12, slack + 1e-12))

    q = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    sim = sampled_sets.Similarity(q, 1.7, rng.standard_normal(3))
    moved = sampled_sets.apply_mobius(torus, sim)
    rel = abs(compute_energy(moved, cfg).value - full.value) / full.value
    out.append(_record("energy", "similarity_invariance", rel <= 1e-10, 1e-10 - rel))

    serial = compute_energy(torus, EnergyConfig(tau=1.0, parallel_blocks=1))
    blocked = compute_energy(torus, EnergyConfig(tau=1.0, parallel_blocks=4))
    gap = abs(serial.value - blocked.value)
    out.append(_record("energy", "block_determinism", gap == 0.0, -gap))
    return out


def check_flatness(rng, threads=1):
    out = []
    base = Subspace(np.eye(2, 3))
    patch = sampled_sets.gen_graph(
        base, lambda t: np.zeros(1), lambda t: np.zeros((1, 2)), [(-1, 1), (-1, 1)], 0.1
    )
    origin = np.zeros(3)

    b = flatness.beta_wrt_plane(patch, origin, base, 0.8)
    out.append(_record("flatness", "flat_patch_zero_beta", b <= 1e-12, 1e-12 - b))

    cd = flatness.coverage_defect(patch, origin, base, 0.8, 0.05)
    th = flatness.theta(patch, origin, base, 0.8, 0.05)
    gap = abs(th - max(b, cd))
    out.append(_record("flatness", "theta_identity", gap == 0.0, -gap))

    worst = -math.inf
    for _ in range(10):
        cloud = rng.standard_normal((25, 3)) * np.array([1.0, 1.0, 0.15])
        s = sampled_sets.SampledSet(2, cloud, None, np.ones(25))
        plane, best = flatness.best_plane(s, np.zeros(3), 4.0, 2)
        for _ in range(20):
            f = random_subspace(rng, 3, 2)
            worst = max(
                worst, best - flatness.beta_wrt_plane(s, np.zeros(3), f, 4.0)
            )
    out.append(_record("flatness", "best_plane_inf_property", worst <= 1e-9, 1e-9 - worst))

    graph = flatness.extract_local_graph(patch, origin, 0.8, 0.1, plane=base)
    out.append(_record("flatness", "flat_graph_zero_lip", graph.lip <= 1e-12, 1e-12 - graph.lip))

    stacked = sampled_sets.gen_parallel_sheets(0.5, 0.001, 100.0)
    inj, witness, _ = flatness.injectivity_check(
        stacked, np.zeros(3), base, 1.0
    )
    out.append(_record("flatness", "stacked_sheets_collide", not inj, 1.0 if not inj else -1.0))
    return out


def _paraboloid(n_dim_m, scale=0.5):
    base = Subspace(np.eye(n_dim_m, n_dim_m + 1))
    return lipgraph.GraphDescriptor(
        base_plane=base,
        evaluator=lambda t: np.array([scale * 0.5 * float(np.dot(t, t))]),
        derivative_evaluator=lambda t: (scale * np.asarray(t, float))[None, :],
        lip_bound=scale,
        anchor=np.zeros(n_dim_m + 1),
        hessian_bound=scale,
    )


def check_lipgraph(rng, threads=1):
    out = []

    g = _paraboloid(1)
    shifted = lipgraph.shift_graph(g, g.point(np.array([0.6])))
    worst = 0.0
    for t in np.linspace(-0.3, 0.3, 21):
        p = shifted.point(np.array([t]))
        tt = g.base_plane.coords(p - g.anchor)
        worst = max(worst, float(np.linalg.norm(g.point(tt) - p)))
    out.append(_record("lipgraph", "shifting_trace", worst <= 1e-10, 1e-10 - worst))

    worst = 0.0
    failures = 0
    for _ in range(20):
        lip = float(rng.uniform(0.0, 0.5))
        chi = float(rng.uniform(0.0, 0.4))
        if chi * (1.0 + lip) >= 0.95:
            continue
        graph = lipgraph.GraphDescriptor(
            base_plane=Subspace(np.eye(1, 2)),
            evaluator=lambda t, lip=lip: lip * np.abs(np.atleast_1d(t)),
            lip_bound=lip,
            anchor=np.zeros(2),
        )
        ang = math.asin(chi) if chi < 1 else 0.0
        target = Subspace([[math.cos(ang), math.sin(ang)]])
        ok, residual = lipgraph.tilting_coverage_check(graph, target, chi, 1.0, 0.1)
        worst = max(worst, residual)
        failures += 0 if ok else 1
    out.append(_record("lipgraph", "tilting_coverage", failures == 0, 1e-6 - worst))

    slack = math.inf
    for beta in (0.1, 0.3, 0.6):
        graph = _paraboloid(2, scale=beta)
        for _ in range(100):
            x = rng.uniform(-1.0, 1.0, 2)
            y = rng.uniform(-1.0, 1.0, 2)
            if np.linalg.norm(x) > 1.0 or np.linalg.norm(y) > 1.0:
                continue
            ang, mid, hi = lipgraph.graph_angle_bounds(graph, x, y)
            slack = min(slack, mid - ang, hi - mid)
    out.append(_record("lipgraph", "angle_sandwich", slack >= -1e-10, slack + 1e-10))

    worst = -math.inf
    graph = _paraboloid(1)
    for _ in range(200):
        x = rng.uniform(-1.0, 1.0, 1)
        y = rng.uniform(-1.0, 1.0, 1)
        if np.linalg.norm(x - y) < 1e-6:
            continue
        lhs, rhs, ok = lipgraph.c2_integrand_bound(graph, x, y, 1.0, 1, 10.0)
        worst = max(worst, lhs - rhs)
    out.append(_record("lipgraph", "c2_pointwise_bound", worst <= 1e-9, -worst))

    fa = lipgraph.GraphDescriptor(
        base_plane=Subspace(np.eye(2, 3)),
        evaluator=lambda t: np.array([0.005 * math.sin(float(t[0] + t[1]))]),
        derivative_evaluator=lambda t: 0.005
        * math.cos(float(t[0] + t[1]))
        * np.ones((1, 2)),
        lip_bound=0.01,
        anchor=np.zeros(3),
    )
    ang = 0.8
    tilted = Subspace.from_spanning(
        np.array(
            [[1.0, 0.0, 0.0], [0.0, math.cos(ang), math.sin(ang)]]
        )
    )
    fb = lipgraph.GraphDescriptor(
        base_plane=tilted,
        evaluator=lambda t: np.array([0.005 * math.sin(float(t[0]))]),
        derivative_evaluator=lambda t: np.array(
            [[0.005 * math.cos(float(t[0])), 0.0]]
        ),
        lip_bound=0.01,
        anchor=np.zeros(3),
    )
    x_plane, j, c_val, verified, pts = lipgraph.intersect_graphs(
        fa, fb, math.sin(ang), 0.01
    )
    ok = verified and j <= 1 and len(pts) > 3
    out.append(_record("lipgraph", "intersect_inequality", ok, c_val if ok else -1.0))

    semi = lipgraph.sobolev_seminorm(lambda t: float(t[0]), [(0.0, 1.0)], 0.5, 2.0, 160)
    gap = abs(semi - 1.0)
    out.append(_record("lipgraph", "sobolev_closed_form", gap <= 1e-2, 1e-2 - gap))
    return out


_CHECKS = {
    "grassmann": check_grassmann,
    "conformal": check_conformal,
    "energy": check_energy,
    "flatness": check_flatness,
    "lipgraph": check_lipgraph,
}


def run_check_suite(name: str, seed: int, threads: int = 1) -> list:
    """Run one named suite (or all) with a fixed seed; returns records."""
    if name != "all" and name not in _CHECKS:
        raise ValueError(f"unknown suite: {name}")
    names = SUITES if name == "all" else (name,)
    records = []
    for suite in names:
        rng = np.random.Generator(np.random.PCG64(seed))
        records.extend(_CHECKS[suite](rng, threads=threads))
    return records
