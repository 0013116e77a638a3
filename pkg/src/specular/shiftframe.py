"""Shifted parametrizations, grazing parameters and cross-sections.

Perturbing a state in position or velocity is re-anchored so that the
perturbation direction is orthogonal to the ray:

* position: the shifted base point xt makes xdot = x - xt perpendicular to
  v, and the base point moves along the straight line
  x(tau) = (1-tau) xt + tau x;
* velocity: the shifted velocity vt + zeta has the same magnitude as
  v + zeta, and v(tau) sweeps the circular arc between them, so
  v(tau) . vdot(tau) = 0.

Along either curve the backward rays that reach the obstacle form a single
parameter interval [tau_minus, tau_plus]; at its ends the ray grazes, and
at a unique interior tau_zero the curve-rate/normal pairing changes sign.
Both are located by bisection on the hit indicator / the sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import PchipInterpolator

from .characteristics import exit_ray_batch
from .geometry import ConvexObstacle

__all__ = [
    "CrossSection",
    "DegenerateCrossSectionError",
    "DegenerateShiftError",
    "Plane",
    "ShiftFrame",
    "build_frame",
    "cross_section",
    "shift_position",
    "shift_velocity",
]

TAU_BISECT_TOL = 1e-10
_PARALLEL_RTOL = 1e-12


class DegenerateShiftError(ValueError):
    """The shift construction is undefined (parallel or vanishing data)."""


class DegenerateCrossSectionError(ValueError):
    """The plane does not cut the obstacle in a closed curve."""


def _unit(w: np.ndarray) -> np.ndarray:
    return w / np.linalg.norm(w)


def shift_position(x, xbar, v) -> np.ndarray:
    """Re-anchor of xbar along v making (x - result) orthogonal to v."""
    x = np.asarray(x, dtype=float).reshape(3)
    xbar = np.asarray(xbar, dtype=float).reshape(3)
    v = np.asarray(v, dtype=float).reshape(3)
    gap = x - xbar
    gn, vn = np.linalg.norm(gap), np.linalg.norm(v)
    if gn == 0.0 or vn == 0.0:
        raise DegenerateShiftError("x == xbar or v == 0")
    if np.linalg.norm(np.cross(gap, v)) <= _PARALLEL_RTOL * gn * vn:
        raise DegenerateShiftError("x - xbar (anti)parallel to v")
    vhat = v / vn
    return xbar + (gap @ vhat) * vhat


def shift_velocity(v, vbar, zeta) -> np.ndarray:
    """Rescale of vbar + zeta to the magnitude of v + zeta, minus zeta.

    Anti-parallel data is rejected.  Exactly parallel same-direction data is
    the continuous identity limit and is returned as such; only the
    rotation frame built on top of the shift degenerates there.
    """
    v = np.asarray(v, dtype=float).reshape(3)
    vbar = np.asarray(vbar, dtype=float).reshape(3)
    zeta = np.asarray(zeta, dtype=float).reshape(3)
    w = v + zeta
    wbar = vbar + zeta
    wn, wbn = np.linalg.norm(w), np.linalg.norm(wbar)
    if wn == 0.0 or wbn == 0.0:
        raise DegenerateShiftError("v + zeta or vbar + zeta vanishes")
    if (np.linalg.norm(np.cross(w, wbar)) <= _PARALLEL_RTOL * wn * wbn
            and w @ wbar < 0.0):
        raise DegenerateShiftError("v + zeta anti-parallel to vbar + zeta")
    return wn * (wbar / wbn) - zeta


@dataclass(frozen=True)
class Plane:
    """A plane through ``origin`` spanned by two orthonormal vectors."""

    origin: np.ndarray
    basis: np.ndarray  # shape (2, 3), rows orthonormal

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(3)
        b = np.asarray(self.basis, dtype=float).reshape(2, 3)
        b0 = _unit(b[0])
        b1 = b[1] - (b[1] @ b0) * b0
        n1 = np.linalg.norm(b1)
        if n1 <= _PARALLEL_RTOL:
            raise DegenerateShiftError("plane basis is degenerate")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "basis", np.vstack([b0, b1 / n1]))

    @property
    def unit_normal(self) -> np.ndarray:
        return np.cross(self.basis[0], self.basis[1])


@dataclass
class ShiftFrame:
    """One shifted configuration with its grazing data.

    ``tau_minus``/``tau_plus`` are the parameters at which the backward ray
    starts/stops reaching the obstacle (NaN when the whole curve misses);
    ``tau_zero`` is the interior sign change of the curve-rate/normal
    pairing.  ``valid`` reflects the construction assumptions (shift
    well-defined, cross-section a closed curve); ``usable`` additionally
    requires a clean grazing interval.
    """

    mode: str  # "position" | "velocity"
    obstacle: ConvexObstacle
    base: tuple
    shifted: np.ndarray
    plane: Plane
    theta: float | None
    rotation: np.ndarray | None
    tau_minus: float = np.nan
    tau_plus: float = np.nan
    tau_zero: float = np.nan
    valid: bool = False
    has_hits: bool = False
    grazing_ok: bool = False
    curve_exterior: bool = True
    subcase: str = "none"  # 'full' | 'tail' | 'head' | 'interior' | 'none'
    _anchor: np.ndarray = field(default=None, repr=False)
    _rate: np.ndarray = field(default=None, repr=False)
    _speed: float = field(default=0.0, repr=False)

    # -- curve evaluation ---------------------------------------------------

    @property
    def plane_origin(self) -> np.ndarray:
        return self.plane.origin

    @property
    def plane_basis(self) -> np.ndarray:
        return self.plane.basis

    @property
    def speed(self) -> float:
        """|v| in position mode, |v + zeta| in velocity mode."""
        return self._speed

    def point(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.mode == "position":
            return self._anchor + tau[..., None] * self._rate
        return np.broadcast_to(self._anchor, tau.shape + (3,)).copy()

    def ray_velocity(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.mode == "position":
            return np.broadcast_to(self._rate_v, tau.shape + (3,)).copy()
        ang = tau * self.theta
        circ = np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=-1)
        return self._speed * circ @ self.rotation.T

    def curve_rate(self, tau):
        """xdot (constant) or vdot(tau)."""
        tau = np.asarray(tau, dtype=float)
        if self.mode == "position":
            return np.broadcast_to(self._rate, tau.shape + (3,)).copy()
        ang = tau * self.theta
        dcirc = np.stack([-np.sin(ang), np.cos(ang), np.zeros_like(ang)], axis=-1)
        return self._speed * self.theta * dcirc @ self.rotation.T

    def exit_batch(self, tau):
        """Backward exits of the rays at the given parameters (vectorized)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if self.mode == "position":
            pts = self.point(tau)
            vels = np.broadcast_to(self._rate_v, (tau.size, 3))
        else:
            pts = np.broadcast_to(self._anchor, (tau.size, 3))
            vels = self.ray_velocity(tau)
        return exit_ray_batch(self.obstacle, pts, vels)

    @property
    def _rate_v(self) -> np.ndarray:
        # ray direction in position mode (fixed v of the base tuple)
        return self.base[2]

    # -- hit window on [0, 1] ------------------------------------------------

    @property
    def usable(self) -> bool:
        return bool(self.valid and self.has_hits and self.grazing_ok
                    and self.curve_exterior and np.isfinite(self.tau_zero))

    def hit_window(self) -> tuple[float, float] | None:
        """Intersection of the hit interval with [0, 1], or None."""
        if not self.has_hits or not (np.isfinite(self.tau_minus)
                                     and np.isfinite(self.tau_plus)):
            return None
        a = max(self.tau_minus, 0.0)
        b = min(self.tau_plus, 1.0)
        if a >= b:
            return None
        return a, b


def _classify_subcase(frame: ShiftFrame) -> str:
    win = frame.hit_window()
    if win is None:
        return "none"
    a, b = win
    full_lo = a <= TAU_BISECT_TOL
    full_hi = b >= 1.0 - TAU_BISECT_TOL
    if full_lo and full_hi:
        return "full"
    if full_hi:
        return "tail"  # hits on [tau_-, 1]
    if full_lo:
        return "head"  # hits on [0, tau_+]
    return "interior"


def _bisect_indicator(frame: ShiftFrame, tau_in: float, tau_out: float) -> float:
    """Hit/no-hit transition between a hitting and a missing parameter."""
    for _ in range(200):
        if abs(tau_out - tau_in) <= TAU_BISECT_TOL:
            break
        mid = 0.5 * (tau_in + tau_out)
        if bool(frame.exit_batch(np.array([mid]))[0][0]):
            tau_in = mid
        else:
            tau_out = mid
    return 0.5 * (tau_in + tau_out)


def _pairing(frame: ShiftFrame, tau: np.ndarray) -> np.ndarray:
    """curve_rate(tau) . grad(xi)(x_b) along the curve (NaN off the hit set)."""
    hit, _, _, grad, _ = frame.exit_batch(tau)
    rate = frame.curve_rate(np.atleast_1d(tau))
    out = np.einsum("ni,ni->n", rate.reshape(-1, 3), grad)
    out[~hit] = np.nan
    return out


def _bisect_sign(frame: ShiftFrame, lo: float, hi: float, sign_lo: float) -> float:
    for _ in range(200):
        if abs(hi - lo) <= TAU_BISECT_TOL * 1e-2:
            break
        mid = 0.5 * (lo + hi)
        val = float(_pairing(frame, np.array([mid]))[0])
        if np.isnan(val):
            break
        if np.sign(val) == sign_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _scan_window(frame: ShiftFrame) -> np.ndarray:
    if frame.mode == "position":
        # rays can only reach the obstacle while the base point's coordinate
        # along xdot stays within one bounding radius of the center's
        rate_norm = np.linalg.norm(frame._rate)
        tau_center = ((frame.obstacle.center - frame._anchor) @ _unit(frame._rate)) / rate_norm
        half = (frame.obstacle.bounding_radius + 1e-9) / rate_norm
        lo = min(0.0, tau_center - half)
        hi = max(1.0, tau_center + half)
        return np.linspace(lo - 1e-6, hi + 1e-6, 513)
    period = 2.0 * np.pi / frame.theta
    return np.linspace(0.5 - period / 2.0, 0.5 + period / 2.0, 721)


def _locate_hits(frame: ShiftFrame) -> None:
    """Fill tau_minus/tau_plus/tau_zero by scan + bisection."""
    taus = _scan_window(frame)
    hit = frame.exit_batch(taus)[0]

    if frame.mode == "position":
        # the straight base curve must stay in the gas region
        levels = frame.obstacle.level_batch(frame.point(taus))
        if np.any(levels > frame.obstacle.boundary_tolerance):
            frame.curve_exterior = False

    circular = frame.mode == "velocity"  # directions are periodic in tau
    idx = np.flatnonzero(hit)
    if idx.size == 0:
        frame.has_hits = False
        return
    frame.has_hits = True

    if circular:
        # single arc on the circle; unwrap a wrapped run of hits
        if hit.all():
            frame.grazing_ok = False
            return
        runs = np.flatnonzero(np.diff(hit.astype(int)) != 0)
        if hit[0] and hit[-1]:
            gap = np.flatnonzero(~hit)
            lo_i, hi_i = gap[-1], gap[0]  # arc wraps through the window edge
            period = taus[-1] - taus[0]
            t_in_lo, t_out_lo = taus[lo_i + 1], taus[lo_i]
            t_in_hi, t_out_hi = taus[hi_i - 1] + period, taus[hi_i] + period
        elif runs.size == 2:
            lo_i, hi_i = runs[0], runs[1]
            t_in_lo, t_out_lo = taus[lo_i + 1], taus[lo_i]
            t_in_hi, t_out_hi = taus[hi_i], taus[hi_i + 1]
        else:
            frame.grazing_ok = False
            return
    else:
        if not np.all(np.diff(idx) == 1):
            frame.grazing_ok = False  # hit set not contiguous: crossing geometry
            return
        lo_i, hi_i = idx[0], idx[-1]
        if lo_i == 0 or hi_i == taus.size - 1:
            frame.grazing_ok = False  # hit interval leaks out of the scan window
            return
        t_in_lo, t_out_lo = taus[lo_i], taus[lo_i - 1]
        t_in_hi, t_out_hi = taus[hi_i], taus[hi_i + 1]

    frame.tau_minus = _bisect_indicator(frame, t_in_lo, t_out_lo)
    frame.tau_plus = _bisect_indicator(frame, t_in_hi, t_out_hi)

    span = frame.tau_plus - frame.tau_minus
    if span <= 10 * TAU_BISECT_TOL:
        frame.grazing_ok = False
        return

    # the transition must be a grazing one: incidence -> 0 at tau_+/-
    probes = np.array([frame.tau_minus + 1e-7 * span, frame.tau_plus - 1e-7 * span])
    hit_p, _, _, grad_p, inc_p = frame.exit_batch(probes)
    speeds = np.linalg.norm(frame.ray_velocity(probes), axis=-1)
    if not np.all(hit_p):
        frame.grazing_ok = False
        return
    scale = speeds * np.linalg.norm(grad_p, axis=-1)
    if np.any(np.abs(inc_p) > 1e-3 * scale):
        frame.grazing_ok = False
        return

    # interior sign change of curve_rate . grad(xi)
    nudge = 1e-6 * span
    p_lo = float(_pairing(frame, np.array([frame.tau_minus + nudge]))[0])
    p_hi = float(_pairing(frame, np.array([frame.tau_plus - nudge]))[0])
    want = (1.0, -1.0) if frame.mode == "position" else (-1.0, 1.0)
    if np.isnan(p_lo) or np.isnan(p_hi) or np.sign(p_lo) != want[0] or np.sign(p_hi) != want[1]:
        frame.grazing_ok = False
        return
    frame.tau_zero = _bisect_sign(
        frame, frame.tau_minus + nudge, frame.tau_plus - nudge, np.sign(p_lo)
    )
    frame.grazing_ok = True


def build_frame(obstacle: ConvexObstacle, mode: str, base: tuple) -> ShiftFrame:
    """Construct a :class:`ShiftFrame` for a position or velocity shift.

    ``base`` is (x, xbar, v) in position mode and (x, v, vbar, zeta) in
    velocity mode.  Shift preconditions raise
    :class:`DegenerateShiftError`; a degenerate cross-section only clears
    ``valid`` (the trivial-dynamics case).
    """
    if mode == "position":
        x, xbar, v = (np.asarray(a, dtype=float).reshape(3) for a in base)
        xt = shift_position(x, xbar, v)
        xdot = x - xt
        plane = Plane(x, np.vstack([_unit(xdot), _unit(v)]))
        frame = ShiftFrame(
            mode=mode, obstacle=obstacle, base=(x, xbar, v), shifted=xt,
            plane=plane, theta=None, rotation=None,
        )
        frame._anchor = xt
        frame._rate = xdot
        frame._speed = float(np.linalg.norm(v))
    elif mode == "velocity":
        x, v, vbar, zeta = (np.asarray(a, dtype=float).reshape(3) for a in base)
        vt = shift_velocity(v, vbar, zeta)
        w = v + zeta
        wb = vbar + zeta
        theta = float(np.arccos(np.clip(_unit(w) @ _unit(wb), -1.0, 1.0)))
        axis = np.cross(wb, w)
        if np.linalg.norm(axis) <= _PARALLEL_RTOL * np.linalg.norm(w) * np.linalg.norm(wb):
            raise DegenerateShiftError("rotation axis degenerate")
        cols = np.column_stack([_unit(wb), _unit(w), _unit(axis)])
        shear = np.array([
            [1.0, np.cos(theta), 0.0],
            [0.0, np.sin(theta), 0.0],
            [0.0, 0.0, 1.0],
        ])
        rotation = cols @ np.linalg.inv(shear)
        plane = Plane(x, rotation.T[:2])
        frame = ShiftFrame(
            mode=mode, obstacle=obstacle, base=(x, v, vbar, zeta), shifted=vt,
            plane=plane, theta=theta, rotation=rotation,
        )
        frame._anchor = x
        frame._rate = None
        frame._speed = float(np.linalg.norm(w))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    try:
        section_radius_sq(obstacle, frame.plane)
        frame.valid = True
    except DegenerateCrossSectionError:
        frame.valid = False
        return frame

    _locate_hits(frame)
    frame.subcase = _classify_subcase(frame)
    return frame


# ---------------------------------------------------------------------------
# cross-sections


@dataclass(frozen=True)
class CrossSection:
    """Arc-length sampled boundary curve of the obstacle in a plane."""

    plane: Plane
    points: np.ndarray            # (n, 3) equally spaced in arc length
    projected_normals: np.ndarray  # |n_par| at each sample
    curvatures: np.ndarray         # circumcircle curvature at each sample
    length: float
    _phi_of_s: object = field(repr=False, default=None)
    _chart: tuple = field(repr=False, default=None)

    @property
    def normal_ratio(self) -> float:
        return float(self.projected_normals.max() / self.projected_normals.min())

    @property
    def curvature_ratio(self) -> float:
        return float(self.curvatures.max() / self.curvatures.min())

    def point_at_arclength(self, s) -> np.ndarray:
        """Curve point at arc length s (periodic), via the dense table."""
        s = np.mod(np.asarray(s, dtype=float), self.length)
        phi = self._phi_of_s(s)
        semi, evecs, center2, plane = self._chart
        local = np.stack([semi[0] * np.cos(phi), semi[1] * np.sin(phi)], axis=-1) @ evecs.T
        return plane.origin + (local + center2) @ plane.basis


def _section_conic(obstacle: ConvexObstacle, plane: Plane):
    b1, b2 = plane.basis
    y0 = plane.origin - obstacle.center
    a_mat = obstacle.matrix
    m2 = np.array([
        [b1 @ a_mat @ b1, b1 @ a_mat @ b2],
        [b2 @ a_mat @ b1, b2 @ a_mat @ b2],
    ])
    lin = np.array([b1 @ a_mat @ y0, b2 @ a_mat @ y0])
    const = y0 @ a_mat @ y0 - obstacle.scale
    center2 = -np.linalg.solve(m2, lin)
    radius_sq = float(lin @ np.linalg.solve(m2, lin) - const)
    return m2, center2, radius_sq


def section_radius_sq(obstacle: ConvexObstacle, plane: Plane) -> float:
    """Squared conic radius of the plane cut; raises when not a closed curve."""
    _, _, radius_sq = _section_conic(obstacle, plane)
    if radius_sq <= max(1e-12, 10.0 * obstacle.boundary_tolerance):
        raise DegenerateCrossSectionError("plane misses the obstacle or is tangent")
    return radius_sq


def cross_section(obstacle: ConvexObstacle, plane: Plane, n_samples: int = 512) -> CrossSection:
    """Sample the closed curve (boundary of obstacle) cut by ``plane``.

    The curve is reparametrized by arc length on a dense internal grid
    before being resampled at ``n_samples`` equally spaced stations.
    Curvature uses the three-point circumcircle (exact on circles).
    """
    m2, center2, radius_sq = _section_conic(obstacle, plane)
    if radius_sq <= max(1e-12, 10.0 * obstacle.boundary_tolerance):
        raise DegenerateCrossSectionError("plane misses the obstacle or is tangent")

    evals, evecs = np.linalg.eigh(m2)
    semi = np.sqrt(radius_sq / evals)
    phi = np.linspace(0.0, 2.0 * np.pi, 8192, endpoint=False)
    local = np.stack([semi[0] * np.cos(phi), semi[1] * np.sin(phi)], axis=-1) @ evecs.T
    coords = local + center2
    pts = plane.origin + coords @ plane.basis

    phi_ext = np.append(phi, 2.0 * np.pi)
    dloc = np.stack([-semi[0] * np.sin(phi_ext), semi[1] * np.cos(phi_ext)], axis=-1) @ evecs.T
    ds = np.linalg.norm(dloc @ plane.basis, axis=-1)
    s_cum = cumulative_simpson(ds, x=phi_ext, initial=0.0)
    length = float(s_cum[-1])
    phi_of_s = PchipInterpolator(s_cum, phi_ext)

    s_targets = np.linspace(0.0, length, n_samples, endpoint=False)
    phi_at = phi_of_s(s_targets)
    local_s = np.stack([semi[0] * np.cos(phi_at), semi[1] * np.sin(phi_at)], axis=-1) @ evecs.T
    samples = plane.origin + (local_s + center2) @ plane.basis

    grads = obstacle.grad_batch(samples)
    normals = grads / np.linalg.norm(grads, axis=-1, keepdims=True)
    qhat = plane.unit_normal
    n_par = normals - np.outer(normals @ qhat, qhat)
    n_par_mag = np.linalg.norm(n_par, axis=-1)

    prev_pts = np.roll(samples, 1, axis=0)
    next_pts = np.roll(samples, -1, axis=0)
    curv = _circumcircle_curvature(prev_pts, samples, next_pts)

    return CrossSection(plane, samples, n_par_mag, curv, length,
                        _phi_of_s=phi_of_s, _chart=(semi, evecs, center2, plane))


def _circumcircle_curvature(p1: np.ndarray, p2: np.ndarray, p3: np.ndarray) -> np.ndarray:
    a = np.linalg.norm(p2 - p1, axis=-1)
    b = np.linalg.norm(p3 - p2, axis=-1)
    c = np.linalg.norm(p3 - p1, axis=-1)
    area2 = np.linalg.norm(np.cross(p2 - p1, p3 - p1), axis=-1)
    return 2.0 * area2 / (a * b * c)
