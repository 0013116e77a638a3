"""Shifted perturbations, grazing parameters and cross-sections.

A perturbation of position or velocity is re-anchored so the perturbation
direction is orthogonal to the ray; along the resulting curve the backward
rays hit the obstacle exactly for tau in [tau_-, tau_+], grazing at the
ends, and the pairing of the curve rate with the boundary normal changes
sign once at tau_zero in between.
"""

import numpy as np

from specular import (
    ConvexObstacle,
    Plane,
    build_frame,
    cross_section,
    shift_position,
    shift_velocity,
)

offset_sphere = ConvexObstacle.sphere(center=(0.0, 1.0, 0.0), radius=1.0)
ellipsoid = ConvexObstacle.ellipsoid(center=(0.0, 0.0, 0.0), semi_axes=(1.0, 2.0, 1.0))

print("== shifts ==")
xt = shift_position(x=(0.0, 0.0, 1.0), xbar=(1.0, 0.0, 0.0), v=(0.0, 0.0, 2.0))
print(f"shifted position: {xt}  (gap orthogonal to v by construction)")
vt = shift_velocity(v=(0.0, 2.0, 0.0), vbar=(1.0, 0.0, 0.0), zeta=(0.0, 0.0, 0.0))
print(f"shifted velocity: {vt}  (same speed, direction of vbar)")

print("\n== a symmetric position frame on the offset sphere ==")
frame = build_frame(offset_sphere, "position",
                    (np.array([2.0, 3.0, 0.0]), np.array([1.0, -0.5, 0.0]),
                     np.array([1.0, 0.0, 0.0])))
print(f"tau_- = {frame.tau_minus:.8f} (exact 1/7 = {1/7:.8f})")
print(f"tau_+ = {frame.tau_plus:.8f} (exact 5/7 = {5/7:.8f})")
print(f"tau_0 = {frame.tau_zero:.8f} (midpoint by symmetry)")

span = frame.tau_plus - frame.tau_minus
taus = np.linspace(frame.tau_minus + 1e-4 * span, frame.tau_plus - 1e-4 * span, 9)
hit, tb, _, grad, inc = frame.exit_batch(taus)
pairing = np.einsum("ni,ni->n", frame.curve_rate(taus), grad)
print("\ntau      t_b      incidence   rate.grad(xi)")
for row in zip(taus, tb, inc, pairing):
    print(" {:.4f}  {:8.4f}  {:+.4f}     {:+.4f}".format(*row))
print("(signs: + before tau_zero, - after; t_b dips at tau_zero)")

print("\n== a velocity frame ==")
vframe = build_frame(ConvexObstacle.sphere((0, 0, 0), 1.0), "velocity",
                     (np.array([2.0, 0.0, 0.0]), np.array([1.0, 0.15, 0.0]),
                      np.array([1.0, -0.15, 0.0]), np.zeros(3)))
print(f"rotation angle theta = {vframe.theta:.4f} rad, "
      f"grazing interval [{vframe.tau_minus:.3f}, {vframe.tau_plus:.3f}], "
      f"tau_zero = {vframe.tau_zero:.3f}")
vel = vframe.ray_velocity(np.array(0.5))
rate = vframe.curve_rate(np.array(0.5))
print(f"|v(0.5)| = {np.linalg.norm(vel):.12f} (constant along the arc), "
      f"v.vdot = {vel @ rate:.2e}")

print("\n== cross-sections ==")
for label, obstacle, origin in (
        ("sphere, great circle", ConvexObstacle.sphere((0, 0, 0), 1.0), (0.0, 0.0, 0.0)),
        ("sphere, height 0.5", ConvexObstacle.sphere((0, 0, 0), 1.0), (0.0, 0.0, 0.5)),
        ("ellipsoid, tilted", ellipsoid, (0.1, 0.2, 0.0))):
    plane = Plane(np.asarray(origin), np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.3]]))
    sec = cross_section(obstacle, plane)
    print(f"{label}: length {sec.length:.4f}, |n_par| ratio {sec.normal_ratio:.4f}, "
          f"curvature ratio {sec.curvature_ratio:.4f}")
print("(for spheres both ratios are exactly 1; convexity keeps them bounded)")
