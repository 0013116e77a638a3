"""The specular singularity: profile, differential inequality, averages.

Along a shifted curve the singularity value compares the ray's incidence at
the boundary with the curve-rate/normal pairing.  It vanishes at the
grazing parameters like a square root, blows up at tau_zero, and satisfies
a differential inequality whose strength is set by the convexity constant.
Its reciprocal integrates to something controlled by the incidence at the
endpoint alone: that is the content of the averaging bound, and the reason
trajectory difference quotients stay integrable.
"""

import numpy as np

from specular import (
    ConvexObstacle,
    build_frame,
    build_profile,
    average_inverse_singularity,
    hit_window_average,
    ode_residual,
    quotient_bounds,
    singularity_sp,
)

sphere = ConvexObstacle.sphere(center=(0.0, 1.0, 0.0), radius=1.0)
frame = build_frame(sphere, "position",
                    (np.array([2.0, 3.0, 0.0]), np.array([1.0, -0.5, 0.0]),
                     np.array([1.0, 0.0, 0.0])))
span = frame.tau_plus - frame.tau_minus

print("== profile ==")
print("offset from tau_-   singularity value")
for frac in (1e-6, 1e-4, 1e-2, 0.2, 0.5 - 1e-3):
    tau = frame.tau_minus + frac * span
    print(f"  {frac:10.2e}        {singularity_sp(frame, tau):12.6f}")
print(f"  at tau_zero         {singularity_sp(frame, frame.tau_zero):12.4g}")
print("(sqrt growth from the grazing end, blow-up at tau_zero)")

print("\n== differential inequality ==")
prof = build_profile(frame, 257)
for frac in (0.1, 0.25, 0.4, 0.6, 0.8):
    tau = frame.tau_minus + frac * span
    try:
        check = ode_residual(prof, tau)
    except ValueError:
        continue
    print(f"tau at {frac:.2f} of span: derivative {check.derivative:10.3f} "
          f">= bound {check.bound:10.3f} (residual {check.residual:+.3e})")

print("\n== averaged reciprocal ==")
for frac in (0.05, 0.25, 0.5, 0.75, 1.0):
    tau_star = frame.tau_minus + frac * span
    integral, ratio = average_inverse_singularity(prof, tau_star)
    print(f"integral over [tau_-, tau_- + {frac:.2f} span] = {integral:.6f}, "
          f"ratio to endpoint bound = {ratio:.4f}")
print("(the ratio stays bounded: the integral is controlled by the endpoint "
      "incidence alone)")

print("\n== hit-window average and difference quotients ==")
tail = build_frame(sphere, "position",
                   (np.array([2.0, 1.5, 0.0]), np.array([1.0, -0.5, 0.0]),
                    np.array([1.0, 0.0, 0.0])))
print(f"window subcase {tail.subcase!r}: averaged reciprocal "
      f"{hit_window_average(tail):.6f}")

# a frame whose rays hit along the whole segment: both trajectories bounce
full = build_frame(sphere, "position",
                   (np.array([2.0, 1.2, 0.0]), np.array([1.0, 0.8, 0.0]),
                    np.array([1.0, 0.0, 0.0])))
ev = full.exit_batch(np.array([1.0]))
t = float(ev[1][0]) + 0.4
rows = quotient_bounds(sphere, t, 0.1, full)
for row in rows:
    status = f"ratio {row.ratio:.4f}" if row.applicable else "inapplicable"
    print(f"  {row.name:8s} lhs={row.lhs:10.4f} rhs={row.rhs:10.4f}  {status}")
print("(each measured difference sits under its singularity-integral bound; "
      "the exit-time window row only fires when exactly one ray has bounced)")
