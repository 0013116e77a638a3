"""Specular singularities along shifted curves and their integral bounds.

The singularity value at tau compares the incidence of the ray hitting the
boundary with the pairing of the curve rate against the boundary normal:

* position mode:  (-grad(xi) . v) / |unit(xdot) . grad(xi)|
* velocity mode:  (-grad(xi) . v(tau)) / (t_b |unit(vdot) . grad(xi)|)

and for the velocity mode there is the rescaled variant
|v(tau) . grad(xi)| / |vdot(tau) . grad(xi)|.

The value vanishes at the grazing parameters tau_-/tau_+ and blows up at
tau_zero, where the denominator changes sign.  Its reciprocal is what every
difference-quotient bound integrates, so everything here evaluates the
reciprocal directly and never propagates the infinite sentinel through
arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .characteristics import backward_exit, flow
from .geometry import ConvexObstacle
from .shiftframe import ShiftFrame

__all__ = [
    "HitLostError",
    "OdeCheck",
    "QuotientRow",
    "SingularityProfile",
    "average_inverse_singularity",
    "build_profile",
    "hit_window_average",
    "ode_residual",
    "quotient_bounds",
    "singularity_sp",
    "singularity_vel",
]

EXCLUSION_FRACTION = 1e-3  # of (tau_+ - tau_-), around tau_zero and the ends


class HitLostError(ValueError):
    """The ray at the requested tau does not reach the obstacle."""


def _raw_parts(frame: ShiftFrame, taus: np.ndarray):
    """(numerator, |unit-rate . grad|, signed rate . grad, t_b) at each tau."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    hit, tb, _, grad, inc = frame.exit_batch(taus)
    if not hit.all():
        raise HitLostError("backward ray misses the obstacle inside the requested range")
    rate = frame.curve_rate(taus).reshape(-1, 3)
    rate_norm = np.linalg.norm(rate, axis=-1)
    pairing = np.einsum("ni,ni->n", rate, grad)
    return -inc, np.abs(pairing) / rate_norm, pairing, tb


def singularity_sp(frame: ShiftFrame, tau) -> float:
    """Position-mode singularity value; +inf at the interior sign change."""
    if frame.mode != "position":
        raise ValueError("expected a position-mode frame")
    num, den, _, _ = _raw_parts(frame, tau)
    with np.errstate(divide="ignore"):
        val = num / den
    return float(val[0])


def singularity_vel(frame: ShiftFrame, tau) -> tuple[float, float]:
    """Velocity-mode singularity and its t_b/|vdot| rescaling."""
    if frame.mode != "velocity":
        raise ValueError("expected a velocity-mode frame")
    num, den, pairing, tb = _raw_parts(frame, tau)
    with np.errstate(divide="ignore"):
        s_vel = num / (tb * den)
        s_tilde = num / np.abs(pairing)
    return float(s_vel[0]), float(s_tilde[0])


def _inverse_values(frame: ShiftFrame, taus: np.ndarray) -> np.ndarray:
    """1/singularity (1/tilde-singularity in velocity mode is NOT used here:
    the averaged quantities integrate the plain singularity)."""
    num, den, _, tb = _raw_parts(frame, taus)
    if frame.mode == "position":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = den / num
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = tb * den / num
    # grazing endpoints have num -> 0; an exact zero only occurs on the
    # boundary of the admissible range
    out[~np.isfinite(out)] = np.inf
    return out


@dataclass
class SingularityProfile:
    """Singularity samples of one frame over [tau_-, tau_+]."""

    frame: ShiftFrame
    tau_grid: np.ndarray
    values: np.ndarray
    tilde_values: np.ndarray | None
    denominators: np.ndarray
    tb_values: np.ndarray

    @property
    def span(self) -> float:
        return float(self.frame.tau_plus - self.frame.tau_minus)


def build_profile(frame: ShiftFrame, n_grid: int = 257) -> SingularityProfile:
    if not frame.usable:
        raise ValueError("frame has no clean grazing interval")
    span = frame.tau_plus - frame.tau_minus
    nudge = 1e-9 * span
    taus = np.linspace(frame.tau_minus + nudge, frame.tau_plus - nudge, n_grid)
    num, den, pairing, tb = _raw_parts(frame, taus)
    with np.errstate(divide="ignore", invalid="ignore"):
        if frame.mode == "position":
            values = num / den
            tilde = None
        else:
            values = num / (tb * den)
            tilde = num / np.abs(pairing)
    return SingularityProfile(frame, taus, values, tilde, pairing, tb)


# -- differential inequality ---------------------------------------------------


@dataclass(frozen=True)
class OdeCheck:
    residual: float
    derivative: float
    bound: float
    scale: float
    branch: int  # +1 left of tau_zero, -1 right


def ode_residual(profile: SingularityProfile, tau: float, h: float | None = None,
                 theta_lower: float | None = None) -> OdeCheck:
    """Central-difference derivative of the singularity minus its lower bound.

    On the right branch the curve is traversed toward tau_plus, where the
    singularity decreases; the mirrored inequality is checked there.  A
    non-negative residual (within tolerance x scale) certifies the bound.
    """
    frame = profile.frame
    span = profile.span
    if h is None:
        h = 1e-5 * span
    excl = EXCLUSION_FRACTION * span
    t0 = frame.tau_zero
    in_left = frame.tau_minus + excl <= tau - h and tau + h <= t0 - excl
    in_right = t0 + excl <= tau - h and tau + h <= frame.tau_plus - excl
    if not (in_left or in_right):
        raise ValueError("tau +- h must avoid the exclusion zones")
    branch = 1 if in_left else -1
    theta = frame.obstacle.theta_lower if theta_lower is None else theta_lower

    taus = np.array([tau - h, tau, tau + h])
    num, den, pairing, tb = _raw_parts(frame, taus)
    if frame.mode == "position":
        vals = num / den
        deriv = branch * (vals[2] - vals[0]) / (2.0 * h)
        rate_norm = np.linalg.norm(frame.curve_rate(np.array(tau)))
        # theta * |xdot|^2 / |xdot . grad| * (|v|^2 + S^2) / S
        bound = theta * rate_norm * (frame.speed**2 + vals[1] ** 2) / (vals[1] * den[1])
    else:
        tilde = num / np.abs(pairing)
        deriv = branch * (tilde[2] - tilde[0]) / (2.0 * h)
        # the quadratic-form lower bound carries |vdot|^2 = (rotation angle)^2
        # |v|^2 on the tilde^2 term
        bound = 1.0 + theta * frame.speed**2 * tb[1] * (
            1.0 + frame.theta**2 * tilde[1] ** 2
        ) / (tilde[1] * np.abs(pairing[1]))
    scale = max(1.0, abs(deriv), abs(bound))
    return OdeCheck(float(deriv - bound), float(deriv), float(bound), float(scale), branch)


# -- averaged quantities -------------------------------------------------------


def _gauss_panels(lo: float, hi: float, n_panels: int, n_gauss: int = 16):
    nodes, weights = np.polynomial.legendre.leggauss(n_gauss)
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * np.diff(edges)[:, None]
    xs = (mid + half * nodes[None, :]).ravel()
    ws = (half * weights[None, :]).ravel()
    return xs, ws


def _integrate_inverse(frame: ShiftFrame, lo: float, hi: float, n_panels: int) -> float:
    """integral of 1/singularity over [lo, hi] inside [tau_-, tau_+].

    Branch pieces are mapped with u = sqrt(tau - tau_-) (left) or
    u = sqrt(tau_+ - tau) (right), which removes the 1/sqrt endpoint
    behavior at the grazing parameters.
    """
    if hi <= lo:
        return 0.0
    t0 = frame.tau_zero
    total = 0.0
    pieces = []
    if lo < t0:
        pieces.append(("left", lo, min(hi, t0)))
    if hi > t0:
        pieces.append(("right", max(lo, t0), hi))
    for side, a, b in pieces:
        if side == "left":
            ua = np.sqrt(max(a - frame.tau_minus, 0.0))
            ub = np.sqrt(max(b - frame.tau_minus, 0.0))
            us, ws = _gauss_panels(ua, ub, n_panels)
            taus = frame.tau_minus + us**2
        else:
            ua = np.sqrt(max(frame.tau_plus - b, 0.0))
            ub = np.sqrt(max(frame.tau_plus - a, 0.0))
            us, ws = _gauss_panels(ua, ub, n_panels)
            taus = frame.tau_plus - us**2
        inv = _inverse_values(frame, taus)
        inv = np.where(np.isfinite(inv), inv, 0.0)
        total += float(np.sum(2.0 * us * inv * ws))
    return total


def average_inverse_singularity(profile: SingularityProfile, tau_star: float):
    """(integral of 1/singularity over [tau_-, tau_star], ratio to its bound).

    The reference bound is evaluated with constant 1; a fitted constant is
    the supremum of the returned ratio over a sample set.
    """
    frame = profile.frame
    if profile.tau_grid.size < 128:
        raise ValueError("profile too coarse: need >= 128 grid points")
    if not (frame.tau_minus < tau_star <= frame.tau_plus):
        raise ValueError("tau_star must lie in (tau_-, tau_+]")
    interior = profile.values[1:-1]
    if np.any(interior == 0.0):
        raise ValueError("singularity vanishes away from grazing: corrupt frame")

    n_panels = max(4, profile.tau_grid.size // 32)
    integral = _integrate_inverse(frame, frame.tau_minus, tau_star, n_panels)

    num, _, _, tb = _raw_parts(frame, np.array([tau_star]))
    incidence_mag = float(num[0])  # |ray velocity . grad(xi)| at tau_star
    gap = tau_star - frame.tau_minus
    with np.errstate(divide="ignore"):
        if frame.mode == "position":
            rhs = gap / incidence_mag
        else:
            free_min = frame.speed * float(np.min(profile.tb_values))
            rhs = gap / incidence_mag * (1.0 + free_min) / frame.speed
    ratio = integral / rhs if np.isfinite(rhs) and rhs > 0 else 0.0
    return integral, ratio


def hit_window_average(frame: ShiftFrame, t: float = 0.0, s: float = 0.0,
                       n_panels: int = 8) -> float:
    """Normalized average of 1/singularity over the hit window in [0, 1].

    Follows the indicator structure of the averaged transfer quantities:
    nonzero only when the hit set covers [0,1], a tail [tau_-, 1] or a head
    [0, tau_+]; the velocity mode additionally requires the shortest exit
    time on the window to fit in the elapsed time t - s.
    """
    if not frame.valid or frame.subcase in ("none", "interior"):
        return 0.0
    a, b = frame.hit_window()
    if frame.mode == "velocity":
        span = frame.tau_plus - frame.tau_minus
        probe = np.linspace(a + 1e-9 * span, b - 1e-9 * span, 129)
        tb = frame.exit_batch(probe)[1]
        if float(np.min(tb)) > t - s:
            return 0.0
    nudge = 1e-12 * (frame.tau_plus - frame.tau_minus)
    integral = _integrate_inverse(frame, a + nudge, b - nudge, n_panels)
    return integral / (b - a)


# -- difference-quotient measurements -------------------------------------------


@dataclass(frozen=True)
class QuotientRow:
    name: str
    applicable: bool
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if not self.applicable:
            return np.nan
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else np.inf
        return self.lhs / self.rhs


def _window_flags(s: float, t1_a: float, t1_b: float):
    both_post = s <= min(t1_a, t1_b)
    both_pre = s > max(t1_a, t1_b)
    return both_post, both_pre


def quotient_bounds(obstacle: ConvexObstacle, t: float, s: float,
                    frame: ShiftFrame) -> list[QuotientRow]:
    """Measured left/right sides of the trajectory difference bounds.

    Position frames produce the V/x, X/x and exit-time-window rows;
    velocity frames the V/v, X/v and window rows.  Rows whose indicator
    fails are marked inapplicable rather than failed.
    """
    rows: list[QuotientRow] = []
    if frame.mode == "position":
        x, _, v = frame.base
        a_state, b_state = (x, v), (frame.shifted, v)
        gap = float(np.linalg.norm(x - frame.shifted))
        speed = frame.speed
    else:
        x = frame.base[0]
        zeta = frame.base[3]
        w1 = frame.base[1] + zeta
        w0 = frame.shifted + zeta
        a_state, b_state = (x, w1), (x, w0)
        gap = float(np.linalg.norm(w1 - w0))
        speed = frame.speed

    ev_a = backward_exit(obstacle, *a_state, t=t)
    ev_b = backward_exit(obstacle, *b_state, t=t)
    t1_a = ev_a.t1
    t1_b = ev_b.t1
    both_post, both_pre = _window_flags(s, t1_a, t1_b)

    both_hit = ev_a.hit and ev_b.hit
    integral = 0.0
    if both_hit and frame.usable:
        integral = _integrate_inverse(frame, max(0.0, frame.tau_minus + 1e-12),
                                      min(1.0, frame.tau_plus - 1e-12), 8)

    st_a = flow(obstacle, t, *a_state, s)
    st_b = flow(obstacle, t, *b_state, s)
    v_diff = float(np.linalg.norm(st_a.v - st_b.v))
    x_diff = float(np.linalg.norm(st_a.x - st_b.x))

    lag = t - s
    if frame.mode == "position":
        rhs_v = (speed + speed**2 * integral) * gap
        rhs_x = (1.0 + speed * lag + speed**2 * lag * integral) * gap
        rows.append(QuotientRow("V_per_x", both_post or both_pre, v_diff, rhs_v))
        rows.append(QuotientRow("X_per_x", both_post or both_pre, x_diff, rhs_x))
    else:
        rhs_v = (1.0 + speed * lag + speed**2 * integral) * gap
        rhs_x = (lag + speed * lag**2 + speed**2 * lag * integral) * gap
        rows.append(QuotientRow("V_per_v", both_post or both_pre, v_diff, rhs_v))
        rows.append(QuotientRow("X_per_v", both_post or both_pre, x_diff, rhs_x))

    # one-sided window: exactly one trajectory has already bounced at s
    window = both_hit and (min(t1_a, t1_b) < s <= max(t1_a, t1_b))
    lhs_l = max(t1_a, t1_b) - s if window else 0.0
    name = "L_per_x" if frame.mode == "position" else "L_per_v"
    rows.append(QuotientRow(name, window, lhs_l, gap * integral))
    return rows
