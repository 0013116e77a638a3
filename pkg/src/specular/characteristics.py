"""Backward exit map, specular reflection and the one-bounce flow.

The backward exit time of a state (x, v) is the first tau > 0 at which
x - tau*v reaches the obstacle boundary.  Outside a convex obstacle a
trajectory bounces at most once, so the flow has exactly two legs: free
streaming down to the bounce, then free streaming with the mirrored
velocity.  ``flow_jacobians`` returns all nine first-derivative blocks of
the post-bounce flow in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ConvexObstacle

__all__ = [
    "BounceEvent",
    "FlowJacobians",
    "PhaseState",
    "SingularJacobianError",
    "GRAZING_RTOL",
    "backward_exit",
    "exit_ray_batch",
    "flow",
    "flow_jacobians",
    "post_bounce_velocity",
    "reflect",
]

# |v . grad(xi)| below this (relative to |v| |grad(xi)|) counts as grazing;
# the Jacobian formulas divide by that product.
GRAZING_RTOL = 1e-8

_NAN3 = np.full(3, np.nan)


class SingularJacobianError(ValueError):
    """Jacobian requested at a grazing state, where the formulas divide by ~0."""


@dataclass(frozen=True)
class PhaseState:
    t: float
    x: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class BounceEvent:
    """Backward exit data of one state.

    ``hit=False`` encodes a backward ray that never reaches the obstacle
    (t_b = infinity); ``t_b`` is then ``inf`` and the boundary fields are
    NaN, with ``t1 = -inf``.
    """

    hit: bool
    t_b: float
    x_b: np.ndarray
    t1: float
    normal_grad: np.ndarray
    incidence: float
    grazing: bool


def reflect(normal_grad, v) -> np.ndarray:
    """Mirror ``v`` across the plane orthogonal to ``normal_grad``."""
    g = np.asarray(normal_grad, dtype=float)
    gn = np.linalg.norm(g)
    if gn == 0.0:
        raise ValueError("normal_grad must be nonzero")
    n = g / gn
    v = np.asarray(v, dtype=float)
    return v - 2.0 * (n @ v) * n


def exit_ray_batch(obstacle: ConvexObstacle, x: np.ndarray, v: np.ndarray):
    """Vectorized backward exit solve for rays x[i] - tau * v[i].

    Returns (hit, t_b, x_b, grad, incidence) arrays.  Callers are expected
    to have checked xi(x) <= tolerance; rows starting on the boundary with
    incoming velocity report t_b = 0 there.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    a_mat = obstacle.matrix
    y = x - obstacle.center
    a = np.einsum("ni,ij,nj->n", v, a_mat, v)
    b = -2.0 * np.einsum("ni,ij,nj->n", y, a_mat, v)
    c0 = np.einsum("ni,ij,nj->n", y, a_mat, y) - obstacle.scale  # = -xi(x)

    disc = b * b - 4.0 * a * c0
    sqrt_disc = np.sqrt(np.maximum(disc, 0.0))
    q = -0.5 * (b + np.copysign(sqrt_disc, np.where(b == 0.0, 1.0, b)))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = q / a
        r2 = np.where(q != 0.0, c0 / np.where(q == 0.0, 1.0, q), np.nan)
    tau_lo = np.fmin(r1, r2)
    tau_hi = np.fmax(r1, r2)

    btol = obstacle.boundary_tolerance
    on_boundary = np.abs(c0) <= btol
    grad_at_x = obstacle.grad_batch(x)
    inc_at_x = np.einsum("ni,ni->n", v, grad_at_x)

    t_b = np.full(x.shape[0], np.inf)
    hit = np.zeros(x.shape[0], dtype=bool)

    # Generic strictly-exterior hit: smallest positive root of the quadratic.
    generic = (~on_boundary) & (disc >= 0.0) & (tau_lo > 0.0)
    t_b[generic] = tau_lo[generic]
    hit[generic] = True

    # On the boundary: incoming rays exit immediately, outgoing rays never
    # return (convexity); near-tangent rounding is absorbed into t_b = 0.
    immediate = on_boundary & (inc_at_x <= 0.0)
    t_b[immediate] = 0.0
    hit[immediate] = True

    with np.errstate(invalid="ignore"):
        x_b = np.where(hit[:, None], x - np.where(hit, t_b, 0.0)[:, None] * v, _NAN3)
        grad = np.where(hit[:, None], obstacle.grad_batch(x_b), _NAN3)
        incidence = np.where(hit, np.einsum("ni,ni->n", v, grad), np.nan)
    return hit, t_b, x_b, grad, incidence


def backward_exit(obstacle: ConvexObstacle, x, v, t: float = 0.0) -> BounceEvent:
    """First boundary crossing of the backward ray {x - tau v : tau > 0}."""
    x = np.asarray(x, dtype=float).reshape(3)
    v = np.asarray(v, dtype=float).reshape(3)
    speed = np.linalg.norm(v)
    if speed == 0.0:
        raise ValueError("velocity must be nonzero")
    if obstacle.level(x) > obstacle.boundary_tolerance:
        raise ValueError("state lies inside the obstacle")

    hit, t_b, x_b, grad, incidence = exit_ray_batch(obstacle, x[None, :], v[None, :])
    if not hit[0]:
        return BounceEvent(False, math.inf, _NAN3.copy(), -math.inf, _NAN3.copy(), math.nan, False)
    g = grad[0]
    inc = float(incidence[0])
    grazing = abs(inc) <= GRAZING_RTOL * speed * np.linalg.norm(g)
    return BounceEvent(True, float(t_b[0]), x_b[0], t - float(t_b[0]), g, inc, grazing)


def post_bounce_velocity(obstacle: ConvexObstacle, x, v) -> np.ndarray:
    """Reflected velocity at the backward bounce of (x, v)."""
    event = backward_exit(obstacle, x, v)
    if not event.hit:
        raise ValueError("state never reaches the boundary")
    return reflect(event.normal_grad, np.asarray(v, dtype=float))


def flow(obstacle: ConvexObstacle, t: float, x, v, s: float) -> PhaseState:
    """Backward characteristic state at time s <= t starting from (t, x, v).

    Free streaming for s in (t - t_b, t]; the reflected leg for
    s in [0, t - t_b].  At s = t - t_b exactly, the position is the bounce
    point and the reported velocity is the pre-reflection one (the velocity
    has a jump there); use :func:`post_bounce_velocity` for the other limit.
    """
    if s > t:
        raise ValueError("flow is evaluated backward: s must satisfy s <= t")
    x = np.asarray(x, dtype=float).reshape(3)
    v = np.asarray(v, dtype=float).reshape(3)
    event = backward_exit(obstacle, x, v, t=t)
    if not event.hit or s >= event.t1:
        return PhaseState(s, x - (t - s) * v, v.copy())
    w = reflect(event.normal_grad, v)
    recheck = exit_ray_batch(obstacle, event.x_b[None, :], w[None, :])
    if recheck[0][0] and recheck[1][0] > obstacle.boundary_tolerance:
        raise AssertionError("reflected backward ray re-entered a convex obstacle")
    return PhaseState(s, event.x_b - (event.t1 - s) * w, w)


@dataclass(frozen=True)
class FlowJacobians:
    """All nine first-derivative blocks of the post-bounce flow."""

    dtb_dx: np.ndarray
    dtb_dv: np.ndarray
    dxb_dx: np.ndarray
    dxb_dv: np.ndarray
    dn_dx: np.ndarray
    dV_dx: np.ndarray
    dV_dv: np.ndarray
    dX_dx: np.ndarray
    dX_dv: np.ndarray


def flow_jacobians(obstacle: ConvexObstacle, t: float, x, v, s: float) -> FlowJacobians:
    """Closed-form Jacobians of t_b, x_b, n(x_b), V(s) and X(s).

    Valid on the reflected leg (s <= t - t_b) away from grazing.  The
    ``dn_dx`` block is the full derivative of x -> n(x_b(x, v)), i.e. it
    includes the chain factor dxb_dx, so every block matches central finite
    differences directly.
    """
    x = np.asarray(x, dtype=float).reshape(3)
    v = np.asarray(v, dtype=float).reshape(3)
    event = backward_exit(obstacle, x, v, t=t)
    if not event.hit:
        raise ValueError("state never reaches the boundary")
    if s > event.t1:
        raise ValueError("Jacobians are defined on the reflected leg s <= t - t_b")
    if event.grazing:
        raise SingularJacobianError("grazing state: v . grad(xi)(x_b) ~ 0")

    g = event.normal_grad
    gn = np.linalg.norm(g)
    n = g / gn
    vn = v @ n
    eye = np.eye(3)
    reflector = eye - 2.0 * np.outer(n, n)
    hess = obstacle.hess()

    dtb_dx = g / (g @ v)
    dtb_dv = -event.t_b * dtb_dx
    dxb_dx = eye - np.outer(v, n) / vn
    dxb_dv = -event.t_b * dxb_dx
    dn_dx = (eye - np.outer(n, n)) @ hess @ dxb_dx / gn
    dV_dx = -2.0 * (np.outer(n, v) + vn * eye) @ dn_dx
    dV_dv = reflector - event.t_b * dV_dx
    lag = event.t1 - s
    dX_dx = reflector - lag * dV_dx
    dX_dv = -event.t_b * reflector - lag * dV_dv
    return FlowJacobians(dtb_dx, dtb_dv, dxb_dx, dxb_dv, dn_dx, dV_dx, dV_dv, dX_dx, dX_dv)
