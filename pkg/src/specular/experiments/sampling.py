"""Seeded samplers shared by the verification suites.

Positions are drawn uniformly from a shell around the obstacle (between the
boundary and about twice its bounding radius); velocities are unit-variance
Gaussian with an extra stratum aimed near the grazing cone, where every
estimate under test concentrates its difficulty.  Every sampler takes an
explicit generator; suites derive per-sample generators from
(seed, sample index) so results do not depend on worker count.
"""

from __future__ import annotations

import math

import numpy as np

from ..geometry import ConvexObstacle
from ..shiftframe import DegenerateShiftError, ShiftFrame, build_frame

GRAZING_FRACTION = 0.2


def rng_for(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def exterior_point(obstacle: ConvexObstacle, rng) -> np.ndarray:
    r = obstacle.bounding_radius
    lo, hi = -((2.0 * r) ** 2), -1e-6 * (1.0 + r * r)
    for _ in range(10_000):
        x = obstacle.center + rng.uniform(-2.4 * r, 2.4 * r, size=3)
        if lo <= obstacle.level(x) <= hi:
            return x
    raise RuntimeError("shell sampling failed")


def grazing_cone_direction(obstacle: ConvexObstacle, x, rng,
                           jitter: float = 0.03) -> np.ndarray:
    """A velocity direction near the grazing cone of x (hits included)."""
    chol = np.linalg.cholesky(obstacle.matrix)
    lt = chol.T
    z_x = lt @ (np.asarray(x) - obstacle.center) / math.sqrt(obstacle.scale)
    zn = np.linalg.norm(z_x)
    alpha = math.asin(min(1.0, 1.0 / zn))
    axis = z_x / zn
    ref = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(axis, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    theta = alpha + jitter * rng.standard_normal()
    phi = rng.uniform(0.0, 2.0 * np.pi)
    zdir = (math.cos(theta) * axis
            + math.sin(theta) * (math.cos(phi) * e1 + math.sin(phi) * e2))
    w = np.linalg.solve(lt, zdir)
    return w / np.linalg.norm(w)


def sample_velocity(obstacle: ConvexObstacle, x, rng, grazing: bool) -> np.ndarray:
    if grazing:
        speed = np.linalg.norm(rng.standard_normal(3))
        return speed * grazing_cone_direction(obstacle, x, rng)
    return rng.standard_normal(3)


def sample_state(obstacle: ConvexObstacle, rng) -> tuple[np.ndarray, np.ndarray]:
    x = exterior_point(obstacle, rng)
    v = sample_velocity(obstacle, x, rng, rng.random() < GRAZING_FRACTION)
    return x, v


def sample_pair(obstacle: ConvexObstacle, rng, max_gap: float = 1.0):
    """Two nearby phase points with |(x,v) - (xbar,vbar)| <= 1."""
    x, v = sample_state(obstacle, rng)
    scale = rng.uniform(0.01, 0.7)
    dx = rng.standard_normal(3)
    dv = rng.standard_normal(3)
    norm = math.sqrt(dx @ dx + dv @ dv)
    dx, dv = dx / norm * scale, dv / norm * scale
    xbar = x + dx
    if obstacle.level(xbar) > -1e-9:
        xbar = x - dx
    gap = math.sqrt(float((x - xbar) @ (x - xbar)) + float(dv @ dv))
    assert gap <= max_gap + 1e-12
    return (x, v), (xbar, v + dv)


def usable_position_frame(obstacle: ConvexObstacle, rng,
                          attempts: int = 120) -> ShiftFrame | None:
    for _ in range(attempts):
        x = exterior_point(obstacle, rng)
        v = (x - obstacle.center) + 0.8 * rng.standard_normal(3)
        xbar = x + rng.uniform(0.1, 0.8) * _unit(rng.standard_normal(3))
        try:
            frame = build_frame(obstacle, "position", (x, xbar, v))
        except DegenerateShiftError:
            continue
        if frame.usable:
            return frame
    return None


def usable_velocity_frame(obstacle: ConvexObstacle, rng,
                          attempts: int = 120) -> ShiftFrame | None:
    for _ in range(attempts):
        x = exterior_point(obstacle, rng)
        v = (x - obstacle.center) + 0.6 * rng.standard_normal(3)
        vbar = v + rng.uniform(0.05, 0.6) * _unit(rng.standard_normal(3))
        zeta = 0.3 * rng.standard_normal(3)
        try:
            frame = build_frame(obstacle, "velocity", (x, v, vbar, zeta))
        except DegenerateShiftError:
            continue
        if frame.usable:
            return frame
    return None


def grazing_family(obstacle: ConvexObstacle, rng):
    """A state whose backward ray grazes exactly, plus the offset direction
    along which perturbed rays cut into the obstacle (sqrt-regime probe)."""
    for _ in range(200):
        d = rng.standard_normal(3)
        d /= np.linalg.norm(d)
        p = obstacle.boundary_point(d)
        grad = obstacle.grad(p)
        ghat = grad / np.linalg.norm(grad)
        t = rng.standard_normal(3)
        t -= (t @ ghat) * ghat
        tn = np.linalg.norm(t)
        if tn < 1e-6:
            continue
        vhat = t / tn
        speed = 0.5 + np.linalg.norm(rng.standard_normal(2))
        t0 = rng.uniform(0.4, 1.2)
        x = p + t0 * speed * vhat
        if obstacle.level(x) > -1e-9:
            continue
        return x, speed * vhat, ghat  # offsets along +ghat push rays into the obstacle
    raise RuntimeError("no grazing family found")


def _unit(w: np.ndarray) -> np.ndarray:
    return w / np.linalg.norm(w)
