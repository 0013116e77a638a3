"""Obstacles, backward exits, the one-bounce flow and its Jacobians.

The gas moves in the exterior of a uniformly convex obstacle described by a
quadratic level set.  Tracing a state (t, x, v) backward, the ray either
escapes to infinity or reaches the boundary once, reflects, and escapes.
Everything below is closed-form; the finite-difference block at the end
shows the Jacobian formulas agreeing with brute-force differencing.
"""

import numpy as np

from specular import (
    ConvexObstacle,
    backward_exit,
    convexity_margin,
    evaluate_level_set,
    flow,
    flow_jacobians,
    outward_unit_normal,
    reflect,
)

sphere = ConvexObstacle.sphere(center=(0.0, 0.0, 0.0), radius=1.0)
ellipsoid = ConvexObstacle.ellipsoid(center=(0.0, 0.0, 0.0), semi_axes=(1.0, 2.0, 1.0))

print("== level sets ==")
sample = evaluate_level_set(sphere, (2.0, 0.0, 0.0))
print(f"unit sphere at x=(2,0,0): value={sample.value}, gradient={sample.gradient}")
print(f"convexity constants: sphere {convexity_margin(sphere, 32, seed=0)}, "
      f"ellipsoid (1,2,1) {convexity_margin(ellipsoid, 32, seed=0)}")
print(f"normal at (1,0,0): {outward_unit_normal(sphere, (1.0, 0.0, 0.0))} "
      "(points into the obstacle, out of the gas region)")

print("\n== backward exits ==")
ev = backward_exit(sphere, x=(2.0, 0.0, 0.0), v=(1.0, 0.0, 0.0))
print(f"head-on: t_b={ev.t_b}, x_b={ev.x_b}, incidence={ev.incidence}")
miss = backward_exit(sphere, x=(2.0, 0.0, 0.0), v=(0.0, 0.0, 1.0))
print(f"sideways: hit={miss.hit} (backward ray never reaches the ball)")

# a ray passing within eps of tangency: the exit point moves like sqrt(eps)
offset = ConvexObstacle.sphere(center=(0.0, 1.0, 0.0), radius=1.0)
for eps in (1e-2, 1e-4, 1e-6):
    ev = backward_exit(offset, x=(1.0, eps, 0.0), v=(1.0, 0.0, 0.0))
    print(f"eps={eps:.0e}: exit gap {np.linalg.norm(ev.x_b - [0, 0, 0]):.6f} "
          f"~ sqrt(2 eps)={np.sqrt(2 * eps):.6f}")

print("\n== one-bounce flow ==")
t, x, v = 2.0, np.array([2.0, 0.3, 0.0]), np.array([1.0, 0.2, 0.0])
for s in (1.6, 0.8, 0.0):
    st = flow(sphere, t, x, v, s)
    print(f"s={s}: X={np.round(st.x, 4)}, V={np.round(st.v, 4)}, "
          f"|V|={np.linalg.norm(st.v):.12f}")
w = reflect(backward_exit(sphere, x, v).normal_grad, v)
print(f"post-bounce velocity: {np.round(w, 4)} (reflection is an involution: "
      f"{np.allclose(reflect(backward_exit(sphere, x, v).normal_grad, w), v)})")

print("\n== Jacobians vs finite differences ==")
jac = flow_jacobians(ellipsoid, t=2.0, x=(2.5, 0.4, 0.1), v=(1.0, 0.3, -0.2), s=0.2)
h = 1e-5
x0 = np.array([2.5, 0.4, 0.1])
v0 = np.array([1.0, 0.3, -0.2])
fd = np.zeros(3)
for i in range(3):
    e = np.zeros(3)
    e[i] = h
    fd[i] = (backward_exit(ellipsoid, x0 + e, v0).t_b
             - backward_exit(ellipsoid, x0 - e, v0).t_b) / (2 * h)
print(f"grad_x t_b closed form:       {jac.dtb_dx}")
print(f"grad_x t_b central difference: {fd}")
print(f"dtb_dv = -t_b dtb_dx holds exactly: "
      f"{np.array_equal(jac.dtb_dv, -backward_exit(ellipsoid, x0, v0).t_b * jac.dtb_dx)}")
