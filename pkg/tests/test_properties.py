"""Property tests for the algebraic invariants (hypothesis-driven)."""

import numpy as np
from hypothesis import given, settings, strategies as st

from specular.characteristics import backward_exit, reflect
from specular.collision import KernelParams, kernel_kc
from specular.geometry import ConvexObstacle
from specular.shiftframe import DegenerateShiftError, shift_position, shift_velocity

UNIT_SPHERE = ConvexObstacle.sphere((0.0, 0.0, 0.0), 1.0)
PARAMS = KernelParams(c=0.7, beta=0.45, vartheta=0.2)

coord = st.floats(-3.0, 3.0, allow_nan=False)
vector = st.tuples(coord, coord, coord).map(np.array)


def nonzero(w, eps=1e-3):
    return float(np.linalg.norm(w)) > eps


@settings(max_examples=200, deadline=None)
@given(vector.filter(nonzero), vector)
def test_reflection_is_an_isometric_involution(n, v):
    w = reflect(n, v)
    assert abs(np.linalg.norm(w) - np.linalg.norm(v)) <= 1e-12 * (1 + np.linalg.norm(v))
    assert np.allclose(reflect(n, w), v, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(vector, vector, vector.filter(nonzero))
def test_shift_position_orthogonal_and_contractive(x, xbar, v):
    try:
        xt = shift_position(x, xbar, v)
    except DegenerateShiftError:
        return
    assert abs((x - xt) @ v) <= 1e-10 * max(1.0, np.linalg.norm(x - xt) * np.linalg.norm(v))
    assert np.linalg.norm(x - xt) <= np.linalg.norm(x - xbar) + 1e-12


@settings(max_examples=200, deadline=None)
@given(vector, vector, vector)
def test_shift_velocity_preserves_speed(v, vbar, zeta):
    try:
        vt = shift_velocity(v, vbar, zeta)
    except DegenerateShiftError:
        return
    w, wt = v + zeta, vt + zeta
    assert abs(np.linalg.norm(wt) - np.linalg.norm(w)) <= 1e-11 * (1 + np.linalg.norm(w))


@settings(max_examples=150, deadline=None)
@given(vector.filter(nonzero), vector, vector.filter(lambda z: nonzero(z, 1e-2)))
def test_kernel_invariant_under_reflections(n, v, zeta):
    rv = reflect(n, v)
    rz = reflect(n, zeta)
    a = kernel_kc(PARAMS, v, zeta)
    b = kernel_kc(PARAMS, rv, rz)
    assert abs(a - b) <= 1e-10 * max(a, b, 1e-300)


@settings(max_examples=150, deadline=None)
@given(vector.filter(lambda x: UNIT_SPHERE.level(x) < -1e-3),
       vector.filter(lambda v: nonzero(v, 1e-2)))
def test_exit_lands_on_boundary_with_incoming_ray(x, v):
    ev = backward_exit(UNIT_SPHERE, x, v)
    if not ev.hit:
        return
    assert abs(UNIT_SPHERE.level(ev.x_b)) <= UNIT_SPHERE.boundary_tolerance
    assert ev.incidence <= 0.0
    # first crossing: the open segment before the exit stays in the gas region
    taus = np.linspace(1e-9, ev.t_b * (1 - 1e-9), 64)
    levels = UNIT_SPHERE.level_batch(x - taus[:, None] * v)
    assert np.all(levels <= UNIT_SPHERE.boundary_tolerance)
