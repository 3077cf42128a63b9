import math

import numpy as np
import pytest

from cascsl.characteristics import (
    BilinearSampler2D,
    LinearSampler1D,
    backtrack_electrostatic,
    backtrack_rotation,
    backtrack_rvm,
    backtrack_swirling,
    swirling_velocity,
)
from cascsl.grid import BoundaryKind, build_grid


def test_rotation_zero_dt_is_identity():
    pts = np.array([[0.3, -1.2], [2.0, 0.5]])
    np.testing.assert_array_equal(backtrack_rotation(pts, 0.0), pts)


def test_rotation_quarter_turn():
    r = 1.7
    out = backtrack_rotation(np.array([[r, 0.0]]), 1.0)
    np.testing.assert_allclose(out, [[0.0, -r]], atol=1e-15)


def test_rotation_full_period_is_identity():
    pts = np.array([[0.4, 0.9], [-1.0, 2.0], [3.0, -0.2]])
    out = backtrack_rotation(pts, 4.0)  # omega = pi/2 -> period 4
    np.testing.assert_allclose(out, pts, atol=1e-14)


def test_rotation_preserves_ordering():
    # rigid motion: pairwise x-ordering of a horizontal line is preserved
    x = np.linspace(-3, 3, 50)
    pts = np.column_stack([x, np.full_like(x, 0.7)])
    out = backtrack_rotation(pts, 0.25)
    assert np.all(np.diff(out[:, 0]) > 0)


def test_swirling_zero_dt_identity_and_boundary_fixed():
    pts = np.array([[np.pi, 0.3], [-np.pi, -1.0], [0.5, np.pi]])
    np.testing.assert_array_equal(backtrack_swirling(pts, 0.5, 0.0, 1), pts)
    out = backtrack_swirling(pts, 0.5, 0.125, 4)
    # velocity vanishes identically on the domain boundary
    np.testing.assert_allclose(out[:2], pts[:2], atol=1e-14)
    np.testing.assert_allclose(out[2, 1], np.pi, atol=1e-14)


def test_swirling_matches_fine_reference():
    pts = np.array([[0.4, -0.8], [1.1, 0.6]])
    ref = backtrack_swirling(pts, 0.625, 0.125, 1000)
    # fourth-order substep convergence toward the fine-step self-oracle
    e1 = np.abs(backtrack_swirling(pts, 0.625, 0.125, 1) - ref).max()
    e2 = np.abs(backtrack_swirling(pts, 0.625, 0.125, 2) - ref).max()
    assert math.log2(e1 / e2) == pytest.approx(4.0, abs=0.7)
    e64 = np.abs(backtrack_swirling(pts, 0.625, 0.125, 64) - ref).max()
    assert e64 < 1e-10


def test_swirling_reversibility():
    pts = np.array([[0.4, -0.8], [1.3, 0.9]])
    back = backtrack_swirling(pts, 1.0, 0.125, 8)

    # forward integration = backward with negated step sequence
    def forward(p, t_old, dt, substeps):
        x, y = p[:, 0].copy(), p[:, 1].copy()
        h = dt / substeps
        t = t_old
        for _ in range(substeps):
            k1 = swirling_velocity(x, y, t)
            k2 = swirling_velocity(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1], t + 0.5 * h)
            k3 = swirling_velocity(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1], t + 0.5 * h)
            k4 = swirling_velocity(x + h * k3[0], y + h * k3[1], t + h)
            x = x + (h / 6) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            y = y + (h / 6) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            t += h
        return np.column_stack([x, y])

    again = forward(back, 0.875, 0.125, 8)
    assert np.abs(again - pts).max() < 1e-9


def test_swirling_jacobian_near_unity():
    # divergence-free flow: the numerical backtrack map is area-preserving
    # to integrator + finite-difference accuracy
    h = 1e-4
    p0 = np.array([[0.5, -0.3]])
    base = [
        backtrack_swirling(p0 + d, 0.125, 0.125, 8)
        for d in (np.array([[h, 0.0]]), np.array([[-h, 0.0]]),
                  np.array([[0.0, h]]), np.array([[0.0, -h]]))
    ]
    dxdx = (base[0][0, 0] - base[1][0, 0]) / (2 * h)
    dydx = (base[0][0, 1] - base[1][0, 1]) / (2 * h)
    dxdy = (base[2][0, 0] - base[3][0, 0]) / (2 * h)
    dydy = (base[2][0, 1] - base[3][0, 1]) / (2 * h)
    jac = dxdx * dydy - dydx * dxdy
    assert jac == pytest.approx(1.0, abs=1e-6)


def test_electrostatic_zero_field_identity():
    pts = np.array([[0.2, 0.7]])
    out = backtrack_electrostatic(pts, lambda x, y: (0.0 * x, 0.0 * y), 0.5)
    np.testing.assert_array_equal(out, pts)


def test_electrostatic_uniform_field_translates():
    c1, c2, dt = 0.3, -0.8, 0.25
    pts = np.array([[0.2, 0.7], [1.0, -2.0]])
    out = backtrack_electrostatic(
        pts, lambda x, y: (np.full_like(x, c1), np.full_like(y, c2)), dt
    )
    np.testing.assert_allclose(out, pts - dt * np.array([c1, c2]), atol=1e-15)


def test_electrostatic_step_halving_order_two():
    # smooth sampled field snapshot; observed order of the midpoint step
    g = build_grid(0.0, 2 * np.pi, 0.0, 2 * np.pi, 32, 32)
    x, y = g.center_mesh()
    ex = np.sin(x) * np.cos(y)
    ey = -np.cos(x) * np.sin(y)
    sx, sy = BilinearSampler2D(g, ex), BilinearSampler2D(g, ey)
    vel = lambda px, py: (sx(px, py), sy(px, py))
    pts = np.array([[2.0, 3.0], [4.0, 1.5]])
    t_total = 0.8

    def integrate(nsteps):
        p = pts.copy()
        for _ in range(nsteps):
            p = backtrack_electrostatic(p, vel, t_total / nsteps)
        return p

    ref = integrate(512)
    errs = [np.abs(integrate(n) - ref).max() for n in (2, 4)]
    order = math.log2(errs[0] / errs[1])
    assert order == pytest.approx(2.0, abs=0.3)


def test_rvm_stationary_point():
    zero = LinearSampler1D(0.0, 0.1, 10, np.zeros(10))
    pts = np.array([[0.35, 0.0]])
    out = backtrack_rvm(pts, zero, zero, zero, 0.5)
    np.testing.assert_array_equal(out, pts)


def test_rvm_free_streaming():
    zero = LinearSampler1D(0.0, 0.1, 10, np.zeros(10))
    p0, dt = 1.4, 0.2
    gamma0 = math.sqrt(1.0 + p0**2)
    out = backtrack_rvm(np.array([[0.5, p0]]), zero, zero, zero, dt)
    np.testing.assert_allclose(out, [[0.5 - dt * p0 / gamma0, p0]], atol=1e-15)


def test_rvm_step_halving_order_two():
    n = 64
    dx = 2 * np.pi / n
    xs = dx * (np.arange(n) + 0.5)
    ex = LinearSampler1D(0.0, dx, n, 0.3 * np.sin(xs))
    a2 = LinearSampler1D(0.0, dx, n, 0.2 * (1 + np.cos(xs)))
    ga = LinearSampler1D(0.0, dx, n, -0.2 * np.sin(xs))
    pts = np.array([[1.0, 0.5], [3.0, -0.7]])
    t_total = 0.8

    def integrate(nsteps):
        p = pts.copy()
        for _ in range(nsteps):
            p = backtrack_rvm(p, ex, a2, ga, t_total / nsteps)
        return p

    ref = integrate(512)
    errs = [np.abs(integrate(n) - ref).max() for n in (2, 4)]
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.3)


def test_bilinear_sampler_wraps_and_clamps():
    g = build_grid(0.0, 1.0, 0.0, 1.0, 4, 4, BoundaryKind.PERIODIC, BoundaryKind.ZERO)
    data = np.arange(16, dtype=float).reshape(4, 4)
    s = BilinearSampler2D(g, data)
    # periodic x: sampling one period apart matches
    a = s(np.array([0.2]), np.array([0.5]))
    b = s(np.array([1.2]), np.array([0.5]))
    assert a == pytest.approx(b, abs=1e-12)
    # clamped y: beyond the wall returns edge values
    c = s(np.array([0.5]), np.array([5.0]))
    d = s(np.array([0.5]), np.array([0.875]))
    assert c == pytest.approx(d)
