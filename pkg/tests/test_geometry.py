import numpy as np
import pytest

from specular.geometry import (
    ConvexObstacle,
    NotConvexError,
    NotOnBoundaryError,
    convexity_margin,
    evaluate_level_set,
    outward_unit_normal,
)


UNIT_SPHERE = ConvexObstacle.sphere((0.0, 0.0, 0.0), 1.0)
ELLIPSOID = ConvexObstacle.ellipsoid((0.0, 0.0, 0.0), (1.0, 2.0, 1.0))


def fd_gradient(obstacle, x, h=1e-6):
    g = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        g[i] = (obstacle.level(x + e) - obstacle.level(x - e)) / (2 * h)
    return g


def fd_hessian(obstacle, x, h=1e-4):
    hess = np.zeros((3, 3))
    for i in range(3):
        ei = np.zeros(3)
        ei[i] = h
        for j in range(3):
            ej = np.zeros(3)
            ej[j] = h
            hess[i, j] = (
                obstacle.level(x + ei + ej)
                - obstacle.level(x + ei - ej)
                - obstacle.level(x - ei + ej)
                + obstacle.level(x - ei - ej)
            ) / (4 * h * h)
    return hess


def test_sphere_level_at_exterior_point():
    s = evaluate_level_set(UNIT_SPHERE, (2.0, 0.0, 0.0))
    assert s.value == pytest.approx(-3.0)
    assert np.allclose(s.gradient, [-4.0, 0.0, 0.0])
    assert np.array_equal(s.hessian, -2.0 * np.eye(3))


def test_sphere_boundary_value_zero():
    assert evaluate_level_set(UNIT_SPHERE, (1.0, 0.0, 0.0)).value == pytest.approx(0.0)


def test_ellipsoid_boundary_gradient_direction():
    s = evaluate_level_set(ELLIPSOID, (0.0, 2.0, 0.0))
    assert s.value == pytest.approx(0.0, abs=1e-14)
    fd = fd_gradient(ELLIPSOID, np.array([0.0, 2.0, 0.0]))
    assert np.allclose(s.gradient, fd, atol=1e-5 * (1 + np.linalg.norm(s.gradient)))
    assert s.gradient[1] < 0 and abs(s.gradient[0]) < 1e-14 and abs(s.gradient[2]) < 1e-14


def test_normals_on_unit_sphere():
    assert np.allclose(outward_unit_normal(UNIT_SPHERE, (1.0, 0.0, 0.0)), [-1.0, 0.0, 0.0])
    assert np.allclose(outward_unit_normal(UNIT_SPHERE, (0.0, 0.0, -1.0)), [0.0, 0.0, 1.0])
    n = outward_unit_normal(ELLIPSOID, (0.0, 2.0, 0.0))
    assert np.allclose(n, [0.0, -1.0, 0.0])
    assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-12)


def test_normal_rejects_off_boundary_points():
    with pytest.raises(NotOnBoundaryError):
        outward_unit_normal(UNIT_SPHERE, (1.5, 0.0, 0.0))


def test_convexity_margin_values():
    assert convexity_margin(UNIT_SPHERE, 16, seed=0) == pytest.approx(2.0)
    # smallest eigenvalue of diag(2, 2/4, 2)
    assert convexity_margin(ELLIPSOID, 16, seed=0) == pytest.approx(0.5)
    quad = ConvexObstacle.quadric(np.eye(3), (0.0, 0.0, 0.0))
    assert convexity_margin(quad, 16, seed=1) == pytest.approx(
        convexity_margin(UNIT_SPHERE, 16, seed=1)
    )


def test_convexity_margin_rejects_indefinite_matrix():
    with pytest.raises(NotConvexError):
        ConvexObstacle.quadric(np.diag([1.0, -1.0, 1.0]), (0.0, 0.0, 0.0))


@pytest.mark.parametrize("obstacle", [UNIT_SPHERE, ELLIPSOID,
                                      ConvexObstacle.quadric([[2.0, 0.3, 0.0],
                                                              [0.3, 1.0, 0.1],
                                                              [0.0, 0.1, 1.5]],
                                                             (0.5, -0.2, 0.1))])
def test_derivative_consistency_1000_random_points(obstacle):
    rng = np.random.default_rng(42)
    xs = rng.uniform(-3.0, 3.0, size=(1000, 3))
    grads = obstacle.grad_batch(xs)
    h = 1e-6
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        fd = (obstacle.level_batch(xs + e) - obstacle.level_batch(xs - e)) / (2 * h)
        tol = 1e-5 * (1 + np.linalg.norm(grads, axis=-1))
        assert np.all(np.abs(grads[:, i] - fd) <= tol)
    hess = obstacle.hess()
    h2 = 1e-4
    for i in range(3):
        ei = np.zeros(3)
        ei[i] = h2
        for j in range(3):
            ej = np.zeros(3)
            ej[j] = h2
            fd = (obstacle.level_batch(xs + ei + ej) - obstacle.level_batch(xs + ei - ej)
                  - obstacle.level_batch(xs - ei + ej)
                  + obstacle.level_batch(xs - ei - ej)) / (4 * h2 * h2)
            assert np.max(np.abs(fd - hess[i, j])) <= 1e-4
    # spot-check the loop-based oracles as well
    for x in xs[:10]:
        s = evaluate_level_set(obstacle, x)
        assert np.allclose(s.gradient, fd_gradient(obstacle, x), atol=1e-5)
        assert np.allclose(s.hessian, fd_hessian(obstacle, x), atol=1e-4)


def test_level_sign_structure():
    for obstacle in (UNIT_SPHERE, ELLIPSOID):
        assert obstacle.level(obstacle.center) > 0
        rng = np.random.default_rng(3)
        for _ in range(50):
            d = rng.standard_normal(3)
            d /= np.linalg.norm(d)
            far = obstacle.center + d * (obstacle.bounding_radius * 1.0001)
            assert obstacle.level(far) < 0
