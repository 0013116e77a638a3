import math

import numpy as np
import pytest

from specular.characteristics import (
    SingularJacobianError,
    backward_exit,
    flow,
    flow_jacobians,
    post_bounce_velocity,
    reflect,
)
from specular.geometry import ConvexObstacle


UNIT_SPHERE = ConvexObstacle.sphere((0.0, 0.0, 0.0), 1.0)
ELLIPSOID = ConvexObstacle.ellipsoid((0.2, -0.1, 0.3), (1.0, 2.0, 1.0))
OFFSET_SPHERE = ConvexObstacle.sphere((0.0, 1.0, 0.0), 1.0)


def marching_exit_time(obstacle, x, v, step=None, tol=1e-12):
    """Bracketing + bisection oracle for t_b, independent of the quadratic path."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    if step is None:
        step = obstacle.bounding_radius / 64.0 / max(np.linalg.norm(v), 1e-12)
    # march far enough to pass the obstacle completely
    horizon = (np.linalg.norm(x - obstacle.center) + 2 * obstacle.bounding_radius) / np.linalg.norm(v)
    tau = 0.0
    prev = obstacle.level(x)
    while tau < horizon:
        tau_next = tau + step
        cur = obstacle.level(x - tau_next * v)
        if cur >= 0.0 and prev < 0.0:
            lo, hi = tau, tau_next
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if obstacle.level(x - mid * v) < 0.0:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
        prev = cur
        tau = tau_next
    return math.inf


def test_radial_exit_on_unit_sphere():
    ev = backward_exit(UNIT_SPHERE, (2.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    assert ev.hit
    assert ev.t_b == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(ev.x_b, [1.0, 0.0, 0.0], atol=1e-12)
    assert ev.incidence == pytest.approx(-2.0)
    assert not ev.grazing


def test_backward_ray_missing_the_sphere():
    ev = backward_exit(UNIT_SPHERE, (2.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    assert not ev.hit
    assert ev.t_b == math.inf
    assert ev.t1 == -math.inf


def test_near_grazing_exit_matches_closed_form():
    eps = 1e-4
    ev = backward_exit(OFFSET_SPHERE, (1.0, eps, 0.0), (1.0, 0.0, 0.0))
    assert ev.hit
    expected_tb = 1.0 - math.sqrt(2 * eps - eps * eps)
    assert ev.t_b == pytest.approx(expected_tb, abs=1e-12)
    assert np.allclose(ev.x_b, [math.sqrt(2 * eps - eps**2), eps, 0.0], atol=1e-12)


def test_exit_matches_marching_oracle():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(200):
        x = rng.uniform(-3, 3, size=3)
        if ELLIPSOID.level(x) > -1e-6:
            continue
        # bias v away from the obstacle so the backward ray points at it
        v = (x - ELLIPSOID.center) + 1.5 * rng.standard_normal(3)
        ev = backward_exit(ELLIPSOID, x, v)
        oracle = marching_exit_time(ELLIPSOID, x, v)
        if not ev.hit:
            assert oracle == math.inf
            continue
        # the marching oracle can only see crossings wider than its step
        assert ev.t_b == pytest.approx(oracle, abs=1e-9)
        assert ELLIPSOID.level(ev.x_b) == pytest.approx(0.0, abs=ELLIPSOID.boundary_tolerance)
        assert ev.incidence <= 0.0
        checked += 1
    assert checked > 50


def test_exit_starting_on_boundary():
    # incoming: immediate exit
    ev = backward_exit(UNIT_SPHERE, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    assert ev.hit and ev.t_b == 0.0
    # outgoing: backward ray leaves and never returns
    ev = backward_exit(UNIT_SPHERE, (1.0, 0.0, 0.0), (-1.0, 0.0, 0.0))
    assert not ev.hit


def test_reflect_examples():
    assert np.allclose(reflect((0.0, 1.0, 0.0), (1.0, -1.0, 0.0)), [1.0, 1.0, 0.0])
    v = np.array([3.0, 4.0, 0.0])
    assert np.allclose(reflect((-1.0, 0.0, 0.0), v), [-3.0, 4.0, 0.0])
    # tangent velocities are unchanged
    assert np.allclose(reflect((0.0, 0.0, 2.0), (1.0, 2.0, 0.0)), [1.0, 2.0, 0.0])


def test_reflect_involution_and_speed():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = rng.standard_normal(3)
        v = rng.standard_normal(3)
        w = reflect(n, v)
        assert np.linalg.norm(w) == pytest.approx(np.linalg.norm(v), rel=1e-13)
        assert np.allclose(reflect(n, w), v, atol=1e-12)


def test_flow_free_streaming_when_missing():
    st = flow(UNIT_SPHERE, 2.0, (2.0, 0.0, 0.0), (0.0, 0.0, 1.0), 0.25)
    assert np.allclose(st.x, np.array([2.0, 0.0, 0.0]) - 1.75 * np.array([0.0, 0.0, 1.0]))
    assert np.allclose(st.v, [0.0, 0.0, 1.0])


def test_flow_head_on_retroreflection():
    st = flow(UNIT_SPHERE, 2.0, (2.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.0)
    assert np.allclose(st.x, [2.0, 0.0, 0.0], atol=1e-12)
    assert np.allclose(st.v, [-1.0, 0.0, 0.0])


def test_flow_continuity_at_bounce():
    x, v = (2.0, 0.3, -0.1), (1.0, 0.2, 0.0)
    ev = backward_exit(UNIT_SPHERE, x, v, t=2.0)
    s_star = ev.t1
    before = flow(UNIT_SPHERE, 2.0, x, v, s_star + 1e-13)
    after = flow(UNIT_SPHERE, 2.0, x, v, s_star - 1e-13)
    assert np.allclose(before.x, after.x, atol=1e-11)
    # velocity is pre-reflection exactly at the bounce instant
    at = flow(UNIT_SPHERE, 2.0, x, v, s_star)
    assert np.allclose(at.x, ev.x_b, atol=1e-12)
    assert np.allclose(at.v, v)
    assert np.allclose(post_bounce_velocity(UNIT_SPHERE, x, v),
                       reflect(ev.normal_grad, v))


def test_flow_speed_and_confinement():
    rng = np.random.default_rng(23)
    for _ in range(30):
        x = rng.uniform(-3, 3, size=3)
        if UNIT_SPHERE.level(x) > -1e-3:
            continue
        v = rng.standard_normal(3)
        t = 2.5
        for s in np.linspace(0.0, t, 100):
            st = flow(UNIT_SPHERE, t, x, v, s)
            assert np.linalg.norm(st.v) == pytest.approx(np.linalg.norm(v), rel=1e-12)
            assert UNIT_SPHERE.level(st.x) <= UNIT_SPHERE.boundary_tolerance


def test_flow_semigroup_property():
    rng = np.random.default_rng(5)
    count = 0
    for _ in range(60):
        x = rng.uniform(-3, 3, size=3)
        if UNIT_SPHERE.level(x) > -1e-3:
            continue
        v = rng.standard_normal(3)
        t = 2.0
        ev = backward_exit(UNIT_SPHERE, x, v, t=t)
        s1, s0 = 1.3, 0.4
        if ev.hit and abs(ev.t1 - s1) < 1e-3 or ev.hit and abs(ev.t1 - s0) < 1e-3:
            continue
        mid = flow(UNIT_SPHERE, t, x, v, s1)
        direct = flow(UNIT_SPHERE, t, x, v, s0)
        relayed = flow(UNIT_SPHERE, s1, mid.x, mid.v, s0)
        assert np.allclose(relayed.x, direct.x, atol=1e-9)
        assert np.allclose(relayed.v, direct.v, atol=1e-9)
        count += 1
    assert count > 20


def test_one_bounce_property():
    rng = np.random.default_rng(31)
    for obstacle in (UNIT_SPHERE, ELLIPSOID):
        seen = 0
        while seen < 40:
            x = rng.uniform(-4, 4, size=3)
            if obstacle.level(x) > -1e-3:
                continue
            v = rng.standard_normal(3)
            ev = backward_exit(obstacle, x, v)
            if not ev.hit or ev.grazing:
                continue
            w = reflect(ev.normal_grad, v)
            again = backward_exit(obstacle, ev.x_b, w)
            assert (not again.hit) or again.t_b <= obstacle.boundary_tolerance
            seen += 1


# -- Jacobians ---------------------------------------------------------------


def fd_jacobian(func, z, h=1e-5):
    """Central-difference Jacobian of func: R^3 -> R^k at z."""
    cols = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        cols.append((np.asarray(func(z + e)) - np.asarray(func(z - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def rel_err(a, b):
    denom = max(np.max(np.abs(b)), 1.0)
    return np.max(np.abs(a - b)) / denom


def test_radial_jacobian_values():
    jac = flow_jacobians(UNIT_SPHERE, 2.0, (2.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.0)
    assert np.allclose(jac.dtb_dx, [1.0, 0.0, 0.0], atol=1e-12)
    assert np.allclose(jac.dtb_dv, [-1.0, 0.0, 0.0], atol=1e-12)


def test_jacobian_consistency_identities():
    jac = flow_jacobians(ELLIPSOID, 1.5, (2.5, 0.5, 0.2), (1.0, 0.3, -0.1), 0.0)
    ev = backward_exit(ELLIPSOID, (2.5, 0.5, 0.2), (1.0, 0.3, -0.1))
    assert np.array_equal(jac.dtb_dv, -ev.t_b * jac.dtb_dx)
    assert np.array_equal(jac.dxb_dv, -ev.t_b * jac.dxb_dx)


def test_grazing_states_rejected():
    with pytest.raises(SingularJacobianError):
        flow_jacobians(OFFSET_SPHERE, 2.0, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.0)


@pytest.mark.parametrize("obstacle", [UNIT_SPHERE, ELLIPSOID])
def test_jacobians_match_finite_differences(obstacle):
    rng = np.random.default_rng(97)
    checked = 0
    while checked < 60:
        x = rng.uniform(-3.5, 3.5, size=3)
        if obstacle.level(x) > -1e-2:
            continue
        v = rng.standard_normal(3)
        ev = backward_exit(obstacle, x, v)
        if not ev.hit:
            continue
        speed = np.linalg.norm(v)
        if abs(ev.incidence) < 5e-2 * speed * np.linalg.norm(ev.normal_grad):
            continue
        t = ev.t_b + 0.4
        s = 0.2  # on the reflected leg: t - t_b = 0.4 > s
        jac = flow_jacobians(obstacle, t, x, v, s)

        def unit_n(e):
            g = np.asarray(e, float)
            return g / np.linalg.norm(g)

        fx = {
            "dtb_dx": fd_jacobian(lambda z: backward_exit(obstacle, z, v).t_b, x),
            "dxb_dx": fd_jacobian(lambda z: backward_exit(obstacle, z, v).x_b, x),
            "dn_dx": fd_jacobian(lambda z: unit_n(backward_exit(obstacle, z, v).normal_grad), x),
            "dV_dx": fd_jacobian(lambda z: flow(obstacle, t, z, v, s).v, x),
            "dX_dx": fd_jacobian(lambda z: flow(obstacle, t, z, v, s).x, x),
            "dtb_dv": fd_jacobian(lambda w: backward_exit(obstacle, x, w).t_b, v),
            "dxb_dv": fd_jacobian(lambda w: backward_exit(obstacle, x, w).x_b, v),
            "dV_dv": fd_jacobian(lambda w: flow(obstacle, t, x, w, s).v, v),
            "dX_dv": fd_jacobian(lambda w: flow(obstacle, t, x, w, s).x, v),
        }
        for name, fd in fx.items():
            assert rel_err(getattr(jac, name), fd) <= 1e-4, name
        checked += 1
