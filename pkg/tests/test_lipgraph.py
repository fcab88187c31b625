import math

import numpy as np
import pytest

from menergy.grassmann import Subspace
from menergy.lipgraph import (
    GraphDescriptor,
    c2_bound_constant,
    c2_integrand_bound,
    graph_angle_bounds,
    intersect_graphs,
    shift_graph,
    sobolev_seminorm,
    sobolev_sufficiency_check,
    tilting_coverage_check,
)

E1 = Subspace([[1.0, 0.0]])


def parabola(scale=1.0, lip=4.0):
    return GraphDescriptor(
        E1,
        lambda t: np.array([scale * float(t[0]) ** 2]),
        lip,
        np.zeros(2),
        derivative_evaluator=lambda t: np.array([[2.0 * scale * float(t[0])]]),
        hessian_bound=2.0 * scale,
    )


def flat_plane_3d():
    return GraphDescriptor(
        Subspace(np.eye(2, 3)),
        lambda t: np.zeros(1),
        0.0,
        np.zeros(3),
        derivative_evaluator=lambda t: np.zeros((1, 2)),
        hessian_bound=0.0,
    )


def test_descriptor_requires_zero_at_anchor():
    with pytest.raises(ValueError):
        GraphDescriptor(E1, lambda t: np.array([1.0]), 1.0, np.zeros(2))


def test_shift_quadratic():
    g = parabola()
    x = g.point([1.0])
    assert np.allclose(x, [1.0, 1.0])
    shifted = shift_graph(g, x)
    assert np.allclose(shifted.anchor, x)
    # u(s + 1) - u(1) = s^2 + 2 s
    assert shifted.value([0.5])[0] == pytest.approx(0.5**2 + 2.0 * 0.5)
    assert shifted.value([0.0])[0] == 0.0
    assert shifted.derivative([0.0])[0, 0] == pytest.approx(2.0)


def test_shift_rejects_off_graph_point():
    with pytest.raises(ValueError):
        shift_graph(parabola(), np.array([1.0, 5.0]))


def test_tilting_zero_angle():
    g = parabola(scale=0.1, lip=0.4)
    ok, worst = tilting_coverage_check(g, E1, 0.0, 1.0, 0.05)
    assert ok
    assert worst < 1e-6


def test_tilting_flat_graph_tilted_target():
    g = GraphDescriptor(E1, lambda t: np.zeros(1), 0.0, np.zeros(2))
    chi = 0.2
    a = math.asin(chi)
    target = Subspace([[math.cos(a), math.sin(a)]])
    ok, worst = tilting_coverage_check(g, target, chi, 1.0, 0.05)
    assert ok
    assert worst < 1e-6


def test_tilting_rejects_large_sigma():
    g = parabola(lip=1.5)
    with pytest.raises(ValueError):
        tilting_coverage_check(g, E1, 0.5, 1.0, 0.05)


def test_tilting_rejects_plane_outside_chi():
    g = GraphDescriptor(E1, lambda t: np.zeros(1), 0.0, np.zeros(2))
    tilted = Subspace([[math.cos(0.5), math.sin(0.5)]])
    with pytest.raises(ValueError):
        tilting_coverage_check(g, tilted, 0.01, 1.0, 0.05)


def test_graph_angle_sandwich_values():
    beta = 0.3
    g = GraphDescriptor(
        E1,
        lambda t: np.array([0.5 * beta * float(t[0]) ** 2]),
        beta,
        np.zeros(2),
        derivative_evaluator=lambda t: np.array([[beta * float(t[0])]]),
    )
    ang, jac_gap, upper = graph_angle_bounds(g, [0.0], [1.0])
    assert jac_gap == pytest.approx(beta)
    assert ang == pytest.approx(beta / math.sqrt(1.0 + beta**2), abs=1e-10)
    assert ang <= jac_gap <= upper + 1e-12


def test_graph_angle_requires_small_lip():
    g = parabola(lip=1.0)
    with pytest.raises(ValueError):
        graph_angle_bounds(g, [0.0], [1.0])


def test_intersect_transversal_lines():
    ga = GraphDescriptor(E1, lambda t: np.zeros(1), 0.0, np.zeros(2))
    gb = GraphDescriptor(
        Subspace([[0.0, 1.0]]), lambda t: np.zeros(1), 0.0, np.zeros(2)
    )
    x_plane, j, c_val, verified, pts = intersect_graphs(ga, gb, 0.5, 0.05)
    assert x_plane is None
    assert j == 0
    assert verified
    assert len(pts) == 1  # only the shared anchor


def test_intersect_tilted_planes_r3():
    base_a = Subspace(np.eye(2, 3))
    ang = math.asin(0.8)
    base_b = Subspace(
        [[1.0, 0.0, 0.0], [0.0, math.cos(ang), math.sin(ang)]]
    )
    ga = GraphDescriptor(base_a, lambda t: np.zeros(1), 0.0, np.zeros(3))
    gb = GraphDescriptor(base_b, lambda t: np.zeros(1), 0.0, np.zeros(3))
    x_plane, j, c_val, verified, pts = intersect_graphs(ga, gb, 0.5, 0.05)
    assert j == 1
    assert c_val == pytest.approx(5.0 / (0.5 - 0.4))
    assert verified
    assert len(pts) > 3
    # the intersection is the first axis
    assert np.max(np.abs(np.asarray(pts)[:, 1:])) < 1e-8
    assert np.max(np.abs(x_plane.frame) - np.abs(np.eye(1, 3))) < 1e-10


def test_intersect_hypothesis_violations():
    ga = GraphDescriptor(E1, lambda t: np.zeros(1), 0.0, np.zeros(2))
    gb = GraphDescriptor(
        Subspace([[0.0, 1.0]]), lambda t: np.zeros(1), 0.0, np.zeros(2)
    )
    with pytest.raises(ValueError):
        intersect_graphs(ga, gb, 0.5, 0.1)  # sigma >= chi / 8
    with pytest.raises(ValueError):
        intersect_graphs(ga, gb, 1.5, 0.05)  # chi / 8 >= 1 / 8
    moved = GraphDescriptor(
        Subspace([[0.0, 1.0]]), lambda t: np.zeros(1), 0.0, np.array([1.0, 0.0])
    )
    with pytest.raises(ValueError):
        intersect_graphs(ga, moved, 0.5, 0.05)


def test_c2_bound_constant_value():
    assert c2_bound_constant(1.0, 1) == pytest.approx(2.0 * 5.0)
    assert c2_bound_constant(1.0, 2) == pytest.approx(8.0 * 17.0)


def test_c2_affine_graph_zero_lhs():
    g = GraphDescriptor(
        E1,
        lambda t: np.array([0.3 * float(t[0])]),
        0.3,
        np.zeros(2),
        derivative_evaluator=lambda t: np.array([[0.3]]),
        hessian_bound=0.0,
    )
    lhs, rhs, ok = c2_integrand_bound(g, [0.2], [0.9], 1.0, 1, 10.0)
    assert lhs == 0.0 and rhs == 0.0 and ok


def test_c2_parabola_sweep():
    g = parabola(scale=0.5)
    rng = np.random.Generator(np.random.PCG64(5))
    for _ in range(100):
        x, y = rng.uniform(-1.0, 1.0, 2)
        if abs(x - y) < 1e-3:
            continue
        lhs, rhs, ok = c2_integrand_bound(g, [x], [y], 1.0, 1, 10.0)
        assert ok
        assert lhs >= 0.0


def test_c2_requirements():
    g = parabola()
    bare = GraphDescriptor(E1, lambda t: np.zeros(1), 0.0, np.zeros(2))
    with pytest.raises(ValueError):
        c2_integrand_bound(bare, [0.0], [1.0], 1.0, 1, 10.0)
    with pytest.raises(ValueError):
        c2_integrand_bound(g, [0.0], [1.0], -0.5, 1, 10.0)
    with pytest.raises(ValueError):
        c2_integrand_bound(g, [0.0], [20.0], 1.0, 1, 10.0)


def test_sobolev_closed_form():
    # du(t) = t, s = 1/2, rho = 2 on the unit interval integrates to 1
    val = sobolev_seminorm(lambda t: float(t[0]), [(0.0, 1.0)], 0.5, 2.0, 200)
    assert val == pytest.approx(1.0, abs=1e-2)


def test_sobolev_input_validation():
    with pytest.raises(ValueError):
        sobolev_seminorm(lambda t: 0.0, [(0.0, 1.0)], 1.5, 2.0, 10)
    with pytest.raises(ValueError):
        sobolev_seminorm(lambda t: 0.0, [(0.0, 1.0)], 0.5, 0.5, 10)


def test_sobolev_sufficiency_flat_graph():
    g = GraphDescriptor(
        E1,
        lambda t: np.zeros(1),
        0.0,
        np.zeros(2),
        derivative_evaluator=lambda t: np.zeros((1, 1)),
    )
    value, power, ratio = sobolev_sufficiency_check(g, 1.0, 1.0, 30)
    assert value == 0.0 and power == 0.0 and ratio == 0.0


def test_sobolev_sufficiency_parabola_stable():
    g = parabola(scale=0.25)
    _, _, r1 = sobolev_sufficiency_check(g, 1.0, 1.0, 40)
    _, _, r2 = sobolev_sufficiency_check(g, 1.0, 1.0, 80)
    assert r1 > 0 and r2 > 0
    assert abs(r1 - r2) / r2 < 0.2
