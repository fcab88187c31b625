import math

import numpy as np
import pytest

from menergy.flatness import (
    EmptyBallError,
    NotAGraphError,
    admissibility_probe,
    best_plane,
    beta_wrt_plane,
    coverage_defect,
    extract_local_graph,
    injectivity_check,
    reifenberg_report,
    theta,
)
from menergy.grassmann import Subspace, angle_metric
from menergy.sampled_sets import SampledSet, gen_circle, gen_graph


def flat_patch(h=0.05, half=1.0):
    base = Subspace(np.eye(2, 3))
    return gen_graph(
        base,
        lambda t: np.zeros(1),
        lambda t: np.zeros((1, 2)),
        [(-half, half), (-half, half)],
        h,
    )


def wedge_surface(beta=1.0, h=0.02):
    xs = np.arange(-0.5 + h / 2.0, 0.5, h)
    zs = np.arange(-0.5 + h / 2.0, 0.5, h)
    xx, zz = np.meshgrid(xs, zs)
    pts = np.column_stack([xx.ravel(), beta * np.abs(xx.ravel()), zz.ravel()])
    return SampledSet(2, pts, None, np.full(len(pts), h * h))


def test_beta_in_plane_samples():
    s = flat_patch()
    assert beta_wrt_plane(s, np.zeros(3), Subspace(np.eye(2, 3)), 0.8) == 0.0


def test_beta_single_offset_sample():
    pts = np.array([[0.0, 0.0], [0.5, 0.3]])
    s = SampledSet(1, pts, None, np.ones(2))
    f = Subspace([[1.0, 0.0]])
    assert beta_wrt_plane(s, np.zeros(2), f, 1.0) == pytest.approx(0.3)


def test_beta_circle_arc():
    s = gen_circle(1.0, 4096)
    p = np.array([1.0, 0.0])
    f = Subspace([[0.0, 1.0]])  # tangent line at p
    # the sagitta of the chord-0.2 arc is 0.02, normalized by r = 0.2
    assert beta_wrt_plane(s, p, f, 0.2) == pytest.approx(0.100, abs=2e-3)


def test_beta_empty_ball():
    s = flat_patch()
    with pytest.raises(EmptyBallError):
        beta_wrt_plane(s, np.array([50.0, 0.0, 0.0]), Subspace(np.eye(2, 3)), 0.5)


def test_coverage_defect_dense_patch():
    s = flat_patch(h=0.02)
    defect = coverage_defect(s, np.zeros(3), Subspace(np.eye(2, 3)), 0.8, 0.05)
    assert defect <= 0.02 / 0.8 + 1e-9


def test_coverage_defect_empty_ball():
    s = flat_patch()
    f = Subspace(np.eye(2, 3))
    assert coverage_defect(s, np.array([50.0, 0.0, 0.0]), f, 0.8, 0.05) == 1.0


def test_coverage_defect_rejects_coarse_grid():
    s = flat_patch()
    with pytest.raises(ValueError):
        coverage_defect(s, np.zeros(3), Subspace(np.eye(2, 3)), 0.8, 0.2)


def test_theta_is_max():
    s = flat_patch(h=0.02)
    f = Subspace(np.eye(2, 3))
    p = np.zeros(3)
    b = beta_wrt_plane(s, p, f, 0.8)
    c = coverage_defect(s, p, f, 0.8, 0.05)
    assert theta(s, p, f, 0.8, 0.05) == max(b, c)


def test_best_plane_collinear():
    pts = np.column_stack([np.linspace(-1, 1, 9), np.zeros(9)])
    s = SampledSet(1, pts, None, np.ones(9))
    plane, beta = best_plane(s, np.zeros(2), 2.0, 1)
    assert beta < 1e-12
    assert angle_metric(plane, Subspace([[1.0, 0.0]])) < 1e-6


def test_best_plane_square_vertices():
    pts = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    s = SampledSet(1, pts, None, np.ones(4))
    plane, beta = best_plane(s, np.zeros(2), 2.0, 1)
    # oracle over line angles: the axis-aligned lines achieve 0.5
    best = min(
        max(abs(-math.sin(a) * x + math.cos(a) * y) for x, y in pts) / 2.0
        for a in np.linspace(0.0, math.pi, 721)
    )
    assert best == pytest.approx(0.5, abs=1e-5)
    assert beta == pytest.approx(best, abs=1e-3)


def test_best_plane_matches_grid_oracle():
    rng = np.random.Generator(np.random.PCG64(17))
    cloud = rng.standard_normal((20, 2)) * np.array([1.0, 0.2])
    s = SampledSet(1, cloud, None, np.ones(20))
    _, beta = best_plane(s, np.zeros(2), 5.0, 1)
    oracle = min(
        beta_wrt_plane(s, np.zeros(2), Subspace([[math.cos(a), math.sin(a)]]), 5.0)
        for a in np.linspace(0.0, math.pi, 721)
    )
    assert beta <= oracle + 1e-3


def test_best_plane_needs_samples():
    pts = np.array([[0.0, 0.0]])
    s = SampledSet(1, pts, None, np.ones(1))
    with pytest.raises(ValueError):
        best_plane(s, np.zeros(2), 1.0, 1)


def test_reifenberg_flat_patch_true():
    s = flat_patch(h=0.02)
    center = int(np.argmin(np.linalg.norm(s.points, axis=1)))
    report = reifenberg_report(s, [center], [0.6, 0.4], 0.1)
    assert report.verdict
    for entry in report.entries:
        assert entry.theta == max(entry.beta, entry.coverage_defect)


def test_reifenberg_circle_true():
    s = gen_circle(1.0, 512)
    report = reifenberg_report(s, [0], [0.2, 0.15], 0.1)
    assert report.verdict


def test_reifenberg_wedge_crease_false():
    s = wedge_surface(beta=1.0)
    crease_index = int(np.argmin(np.linalg.norm(s.points, axis=1)))
    report = reifenberg_report(s, [crease_index], [0.4], 0.3)
    # the crease forces theta at least beta / (2 sqrt(1 + beta^2)) = 0.354
    assert not report.verdict


def test_reifenberg_requires_decreasing_radii():
    s = flat_patch()
    with pytest.raises(ValueError):
        reifenberg_report(s, [0], [0.1, 0.2], 0.1)


def test_admissibility_flat_patch_passes():
    s = flat_patch(h=0.02, half=1.2)
    h = Subspace(np.eye(2, 3))
    report = admissibility_probe(s, np.zeros(3), h, 0.2, 2.0, 0.6, 1.5)
    assert report.passed
    assert report.coverage_margin <= 0.0
    assert report.mass_margin >= 0.0


def test_admissibility_parallel_sheets_pass():
    base = flat_patch(h=0.02, half=1.2)
    lifted = SampledSet(
        2,
        base.points + np.array([0.0, 0.0, 0.4]),
        base.frames,
        base.weights,
    )
    both = SampledSet(
        2,
        np.vstack([base.points, lifted.points]),
        base.frames + lifted.frames,
        np.concatenate([base.weights, lifted.weights]),
    )
    h = Subspace(np.eye(2, 3))
    report = admissibility_probe(both, np.zeros(3), h, 0.2, 2.0, 0.6, 1.5)
    assert report.passed


def test_admissibility_hole_fails_coverage():
    s = flat_patch(h=0.02, half=1.2)
    keep = np.linalg.norm(s.points - np.array([0.4, 0.0, 0.0]), axis=1) > 0.2
    holed = SampledSet(
        2,
        s.points[keep],
        tuple(fr for fr, k in zip(s.frames, keep) if k),
        s.weights[keep],
    )
    h = Subspace(np.eye(2, 3))
    report = admissibility_probe(
        holed, np.zeros(3), h, 0.05, 2.0, 0.6, 1.5, grid_step=0.06
    )
    assert not report.coverage_pass
    assert report.witness is not None


def test_probe_pass_implies_coverage_bound():
    # a probe-passing fixture stays below 2 alpha / sqrt(1 + alpha^2) + slack
    s = flat_patch(h=0.02, half=1.2)
    h = Subspace(np.eye(2, 3))
    alpha = 0.2
    report = admissibility_probe(s, np.zeros(3), h, alpha, 2.0, 0.6, 1.5)
    assert report.passed
    grid = 0.6 / 16.0
    defect = coverage_defect(s, np.zeros(3), h, 0.6, grid)
    assert defect < 2.0 * alpha / math.sqrt(1.0 + alpha**2) + 2.0 * grid / 0.6


def test_injectivity_flat_and_graph():
    s = flat_patch()
    f = Subspace(np.eye(2, 3))
    ok, witness, hyp = injectivity_check(s, np.zeros(3), f, 0.8)
    assert ok and witness is None and hyp

    base = Subspace(np.eye(2, 3))
    graph = gen_graph(
        base,
        lambda t: np.array([0.2 * float(t[0])]),
        lambda t: np.array([[0.2, 0.0]]),
        [(-1, 1), (-1, 1)],
        0.1,
    )
    ok, witness, hyp = injectivity_check(graph, np.zeros(3), base, 0.8)
    assert ok and hyp


def test_injectivity_stacked_patches():
    s = flat_patch(h=0.1)
    stacked = SampledSet(
        2,
        np.vstack([s.points, s.points + np.array([0.0, 0.0, 0.5])]),
        None,
        np.concatenate([s.weights, s.weights]),
    )
    ok, witness, _ = injectivity_check(stacked, np.zeros(3), Subspace(np.eye(2, 3)), 2.0)
    assert not ok
    assert witness is not None
    a, b = witness
    assert np.linalg.norm(stacked.points[a][:2] - stacked.points[b][:2]) < 1e-6


def test_extract_flat_graph():
    s = flat_patch()
    g = extract_local_graph(s, np.zeros(3), 0.8, 0.1, plane=Subspace(np.eye(2, 3)))
    assert g.lip == 0.0
    assert np.max(np.abs(g.values)) < 1e-12


def test_extract_circle_graph():
    s = gen_circle(1.0, 2048)
    p = np.array([1.0, 0.0])
    g = extract_local_graph(s, p, 0.3, 0.1, plane=Subspace([[0.0, 1.0]]))
    # worst secant slope on the arc is tan of the subtended half-angle sum
    assert g.lip <= math.tan(2.0 * math.asin(0.15)) + 0.01


def test_extract_graph_failure_witness():
    s = flat_patch(h=0.1)
    stacked = SampledSet(
        2,
        np.vstack([s.points, s.points + np.array([0.0, 0.0, 0.5])]),
        None,
        np.concatenate([s.weights, s.weights]),
    )
    with pytest.raises(NotAGraphError) as err:
        extract_local_graph(stacked, np.zeros(3), 2.0, 0.1, plane=Subspace(np.eye(2, 3)))
    assert err.value.witness is not None


def test_extract_wedge_graph_lip_beta():
    beta = 1.0
    s = wedge_surface(beta=beta)
    plane = Subspace([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    g = extract_local_graph(s, np.zeros(3), 0.45, 0.1, plane=plane)
    assert g.lip == pytest.approx(beta, abs=1e-6)
