"""Desk-scale evaluation of the mild-formulation right-hand side.

``duhamel_evaluate`` integrates the damped gain term along the specular
characteristic of (t, x, v):

    e^{-int_0^t freq} f0(X(0), V(0))
    + int_0^t e^{-int_s^t freq} gain(f, f)(s, X(s), V(s)) ds

with fixed-order Gauss rules on each smooth leg of the trajectory (the
velocity jumps at the bounce, so the time axis splits there).  The damping
integrals reuse the frequency samples through an exact Legendre
interpolant, so no nested frequency quadrature is needed.

``picard_sweep`` measures sup |f_{k+1} - f_k| over a seeded phase sample
set.  The first sweep is exact.  From the second sweep on, the field fed
into the collision integrals is the collision-free transport of the
initial datum (deeper nesting is unaffordable at any scale); the reported
residuals then measure the remaining contraction visible at toy scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..characteristics import backward_exit, exit_ray_batch, flow
from ..collision import KernelParams, VelocityField, collision_frequency, gain_carleman
from ..geometry import ConvexObstacle
from .sampling import exterior_point

__all__ = ["PicardReport", "duhamel_evaluate", "picard_sweep", "transport_field"]

TOY_HORIZON = 0.1


def transport_field(obstacle: ConvexObstacle, f0: VelocityField, s: float) -> VelocityField:
    """f0 carried along the specular flow from time s down to 0 (vectorized)."""

    def value(x, V):
        V = np.atleast_2d(np.asarray(V, dtype=float))
        flat = V.reshape(-1, 3)
        pos = np.broadcast_to(np.asarray(x, dtype=float), flat.shape)
        hit, tb, xb, grad, _ = exit_ray_batch(obstacle, pos, flat)
        t1 = s - tb
        bounced = hit & (t1 > 0.0)
        x0 = pos - s * flat
        v0 = flat.copy()
        if np.any(bounced):
            g = grad[bounced]
            n = g / np.linalg.norm(g, axis=-1, keepdims=True)
            vb = flat[bounced]
            w = vb - 2.0 * np.einsum("ni,ni->n", n, vb)[:, None] * n
            v0[bounced] = w
            x0[bounced] = xb[bounced] - t1[bounced, None] * w
        out = np.asarray(f0.func(x0, v0), dtype=float)
        return out.reshape(V.shape[:-1])

    return VelocityField(value, f0.weight_bound, f"transport({f0.label}@{s})")


@dataclass
class _Leg:
    a: float
    b: float
    nodes: np.ndarray
    weights: np.ndarray
    coef: np.ndarray | None = None

    def fit(self, values: np.ndarray) -> None:
        t = (2.0 * self.nodes - (self.a + self.b)) / (self.b - self.a)
        self.coef = np.polynomial.legendre.legfit(t, values, len(values) - 1)

    def integral_from(self, s: float) -> float:
        t = (2.0 * s - (self.a + self.b)) / (self.b - self.a)
        anti = np.polynomial.legendre.legint(self.coef)
        scale = 0.5 * (self.b - self.a)
        return scale * float(np.polynomial.legendre.legval(1.0, anti)
                             - np.polynomial.legendre.legval(t, anti))


def duhamel_evaluate(obstacle: ConvexObstacle, params: KernelParams,
                     f_time, f0: VelocityField, t: float, x, v,
                     time_nodes: int = 16, resolution: float = 0.5) -> float:
    """Right-hand side of the mild formulation at one phase point.

    ``f_time`` maps a time s to the :class:`VelocityField` used inside the
    collision terms at that time (pass ``lambda s: field`` for a field
    constant in time).  ``t`` must stay inside the toy horizon: this is a
    desk-scale evaluator, not a solver.
    """
    if t > TOY_HORIZON:
        raise ValueError(f"toy horizon is {TOY_HORIZON}; got t = {t}")
    x = np.asarray(x, dtype=float).reshape(3)
    v = np.asarray(v, dtype=float).reshape(3)

    event = backward_exit(obstacle, x, v, t=t)
    cuts = [0.0, t]
    if event.hit and 0.0 < event.t1 < t:
        cuts = [0.0, event.t1, t]
    gl_x, gl_w = np.polynomial.legendre.leggauss(time_nodes)
    legs = []
    states = {}
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        leg = _Leg(a, b, mid + half * gl_x, half * gl_w)
        freqs = np.empty(time_nodes)
        for i, s in enumerate(leg.nodes):
            st = flow(obstacle, t, x, v, float(s))
            states[float(s)] = st
            freqs[i] = collision_frequency(f_time(float(s)), st.x, st.v,
                                           resolution=resolution)
        leg.fit(freqs)
        legs.append(leg)

    def damping(s: float) -> float:
        total = 0.0
        for leg in legs:
            if s <= leg.a:
                total += leg.integral_from(leg.a)
            elif s < leg.b:
                total += leg.integral_from(s)
        return total

    start = flow(obstacle, t, x, v, 0.0)
    value = math.exp(-damping(0.0)) * float(np.asarray(
        f0.func(start.x[None, :], start.v[None, :])).ravel()[0])
    for leg in legs:
        for s, w in zip(leg.nodes, leg.weights):
            st = states[float(s)]
            gain = gain_carleman(params, f_time(float(s)), st.x, st.v, "A",
                                 resolution=resolution)
            value += w * math.exp(-damping(float(s))) * gain
    return value


@dataclass
class PicardReport:
    residuals: list
    sup_residual: float
    points: int
    note: str = ""


def picard_sweep(obstacle: ConvexObstacle, params: KernelParams,
                 f0: VelocityField, n_iter: int, n_points: int = 48,
                 horizon: float = 0.05, seed: int = 0,
                 time_nodes: int = 16, resolution: float = 0.5) -> PicardReport:
    """Sup residuals of up to three mild-formulation sweeps on sampled states."""
    if not 1 <= n_iter <= 3:
        raise ValueError("n_iter must be 1, 2 or 3 at toy scale")
    if not 1 <= n_points <= 200:
        raise ValueError("the sample set is capped at 200 phase points")
    if horizon > TOY_HORIZON:
        raise ValueError(f"toy horizon is {TOY_HORIZON}")
    rng = np.random.default_rng(seed)
    points = [(exterior_point(obstacle, rng), rng.standard_normal(3))
              for _ in range(n_points)]

    const_field = VelocityField(lambda x, V: np.asarray(f0.func(
        np.broadcast_to(np.asarray(x, float), np.atleast_2d(V).shape), np.atleast_2d(V))),
        f0.weight_bound, f0.label)

    def start_value(x, v):
        return float(np.asarray(f0.func(np.asarray(x)[None, :], np.asarray(v)[None, :])).ravel()[0])

    sweeps = []
    # sweep 1: inner field is the constant-in-time initial datum (exact)
    sweeps.append(lambda s: const_field)
    if n_iter >= 2:
        # further sweeps: inner field is the transported initial datum
        sweeps.append(lambda s: transport_field(obstacle, f0, s))
    if n_iter >= 3:
        sweeps.append(lambda s: transport_field(obstacle, f0, s))

    residuals = []
    prev_vals = np.array([start_value(x, v) for x, v in points])
    for f_time in sweeps[:n_iter]:
        new_vals = np.array([
            duhamel_evaluate(obstacle, params, f_time, f0, horizon, x, v,
                             time_nodes, resolution)
            for x, v in points
        ])
        residuals.append(float(np.max(np.abs(new_vals - prev_vals))))
        prev_vals = new_vals
    note = "" if n_iter < 3 else \
        "third sweep reuses the transport-truncated inner field"
    return PicardReport(residuals, residuals[-1], n_points, note)
