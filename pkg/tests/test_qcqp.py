import math

import numpy as np
import pytest

from wptwave.qcqp import ProjectionError, SolveReport, SubproblemInstance, project, solve


def test_ball_only_linear_closed_form():
    c = np.array([3.0, -4.0])
    inst = SubproblemInstance(c=c, mu=0.0, ball_radius_sq=4.0)
    rep = solve(inst)
    np.testing.assert_allclose(rep.z, 2.0 * c / 5.0, rtol=1e-12)
    assert rep.converged
    assert rep.active_constraints == ("ball",)


def test_zero_linear_term_returns_origin():
    inst = SubproblemInstance(c=np.zeros(3), mu=0.7, ball_radius_sq=1.0)
    rep = solve(inst)
    np.testing.assert_allclose(rep.z, 0.0, atol=1e-12)


def test_unconstrained_quadratic_interior_optimum():
    # with mu > 0 and a roomy ball the optimum is c/(2 mu), strictly inside
    c = np.array([0.2, -0.1])
    inst = SubproblemInstance(c=c, mu=1.0, ball_radius_sq=100.0)
    rep = solve(inst, tol=1e-10)
    np.testing.assert_allclose(rep.z, c / 2.0, atol=1e-8)
    assert "ball" not in rep.active_constraints


def test_two_dimensional_grid_oracle():
    rng = np.random.default_rng(7)
    for _ in range(10):
        c = rng.normal(size=2)
        mu = float(rng.uniform(0.1, 1.0))
        p_t = float(rng.uniform(0.5, 2.0))
        a = rng.normal(size=(1, 2))
        d = np.array([float(rng.uniform(0.1, 0.6)) * np.linalg.norm(a)])
        inst = SubproblemInstance(c, mu, p_t, a, d)
        rep = solve(inst, tol=1e-10)
        r = math.sqrt(p_t)
        xs = np.linspace(-r, r, 1000)
        gx, gy = np.meshgrid(xs, xs)
        pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        ok = (np.sum(pts * pts, axis=1) <= p_t) & (pts @ a[0] <= d[0])
        vals = pts @ c - mu * np.sum(pts * pts, axis=1)
        best = float(vals[ok].max())
        assert rep.objective >= best - 1e-3
        assert inst.feasibility_residual(rep.z) <= 1e-8


def test_feasibility_residuals_scaled():
    rng = np.random.default_rng(3)
    c = rng.normal(size=6)
    a = rng.normal(size=(4, 6))
    d = np.abs(rng.normal(size=4)) * 0.3
    inst = SubproblemInstance(c, 0.5, 1.0, a, d)
    rep = solve(inst)
    assert float(rep.z @ rep.z) <= 1.0 + 1e-8
    slack = a @ rep.z - d
    assert np.all(slack <= 1e-8 * np.linalg.norm(a, axis=1) * 1.0)


def test_unique_optimum_from_different_starts():
    rng = np.random.default_rng(11)
    c = rng.normal(size=4)
    a = rng.normal(size=(3, 4))
    d = np.abs(rng.normal(size=3))
    inst = SubproblemInstance(c, 0.8, 2.0, a, d)
    tol = 1e-10
    za = solve(inst, tol=tol).z
    zb = solve(inst, tol=tol, z0=rng.normal(size=4)).z
    zc = solve(inst, tol=tol, z0=np.zeros(4)).z
    assert np.linalg.norm(za - zb) < 10 * math.sqrt(tol)
    assert np.linalg.norm(za - zc) < 10 * math.sqrt(tol)


def test_objective_never_below_feasible_references():
    rng = np.random.default_rng(19)
    c = rng.normal(size=5)
    a = rng.normal(size=(2, 5))
    d = np.abs(rng.normal(size=2))
    inst = SubproblemInstance(c, 0.4, 1.5, a, d)
    rep = solve(inst)
    assert rep.objective >= inst.objective(np.zeros(5)) - 1e-12
    for _ in range(200):
        pt = project(rng.normal(size=5), 1.5, a, d)
        assert rep.objective >= inst.objective(pt) - 1e-8


def test_project_inside_returns_same_point():
    z = np.array([0.1, 0.2])
    out = project(z, 1.0, np.array([[1.0, 0.0]]), np.array([0.5]))
    np.testing.assert_array_equal(out, z)


def test_project_ball_is_radial():
    z = np.array([3.0, 4.0])
    out = project(z, 1.0)
    np.testing.assert_allclose(out, z / 5.0, rtol=1e-12)


def test_project_single_halfspace_orthogonal():
    # ball is slack, so the projection is the textbook hyperplane formula
    z = np.array([1.0, 1.0])
    a = np.array([[1.0, 1.0]])
    d = np.array([1.0])
    out = project(z, 100.0, a, d)
    expected = z - a[0] * ((a[0] @ z - d[0]) / (a[0] @ a[0]))
    np.testing.assert_allclose(out, expected, atol=1e-10)


def test_project_matches_grid_projection():
    # nearest feasible point to a target, checked against brute force
    rng = np.random.default_rng(23)
    a = np.array([[1.0, 0.3], [-0.2, 1.0]])
    d = np.array([0.4, 0.5])
    target = np.array([1.3, 1.1])
    out = project(target, 1.0, a, d, tol=1e-12)
    xs = np.linspace(-1.0, 1.0, 2000)
    gx, gy = np.meshgrid(xs, xs)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    ok = (np.sum(pts * pts, axis=1) <= 1.0) & np.all(pts @ a.T <= d, axis=1)
    dists = np.linalg.norm(pts[ok] - target, axis=1)
    best = pts[ok][np.argmin(dists)]
    assert np.linalg.norm(out - best) < 2e-3
    del rng


def test_infeasible_system_raises():
    # z_0 >= 10 cannot meet ||z|| <= 1
    a = np.array([[-1.0, 0.0]])
    d = np.array([-10.0])
    with pytest.raises(ProjectionError):
        project(np.zeros(2), 1.0, a, d, max_iter=200)


def test_instance_validation():
    with pytest.raises(ValueError):
        SubproblemInstance(np.array([1.0]), -0.1, 1.0)
    with pytest.raises(ValueError):
        SubproblemInstance(np.array([1.0]), 0.0, 0.0)
    with pytest.raises(ValueError):
        SubproblemInstance(np.array([1.0]), 0.0, 1.0, np.ones((1, 2)), np.ones(1))
    with pytest.raises(ValueError):
        SubproblemInstance(
            np.array([1.0, 2.0]), 0.0, 1.0, np.zeros((1, 2)), np.array([-1.0])
        )


def test_report_shape():
    inst = SubproblemInstance(np.array([1.0, 0.0]), 0.2, 1.0)
    rep = solve(inst)
    assert isinstance(rep, SolveReport)
    assert rep.kkt_residual <= 1e-8
    assert rep.iterations >= 1
