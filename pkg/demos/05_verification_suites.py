"""Running the verification suites from Python (the CLI wraps the same calls).

Equivalent command lines:

    specular list-suites
    specular verify grazing_scan --config demos/configs/sphere.cfg --out report.json
    specular verify integrability_suite --config demos/configs/origin_sphere.cfg

Reports are byte-identical for a fixed (config, seed); timing stays out of
the JSON payload.
"""

import json

import numpy as np

from specular.experiments import parse_config, run_suite
from specular.collision import KernelParams, sqrt_maxwellian
from specular.experiments.duhamel import picard_sweep
from specular.experiments.seminorm import estimate_seminorm
from specular.collision import VelocityField
from specular.geometry import ConvexObstacle

OFFSET_SPHERE = """
[obstacle]
kind = sphere
center = 0 1 0
radius = 1.0
"""

ORIGIN_SPHERE = """
[obstacle]
kind = sphere
center = 0 0 0
radius = 1.0

[kernel]
c = 0.5
beta = 0.45
varpi = 1.0
vartheta = 0.2

[suite.integrability_suite]
n_samples = 50000
"""

print("== grazing scan (the sqrt(eps) law) ==")
report = run_suite(parse_config(OFFSET_SPHERE, "grazing_scan", seed=0))
slope = next(r for r in report.rows if r.row_id == "holder_slope")
print(f"verdict: {report.verdict}; slope note: {slope.note}")

print("\n== integrability suite ==")
report = run_suite(parse_config(ORIGIN_SPHERE, "integrability_suite", seed=0))
for row in report.rows:
    print(f"  {row.row_id}: {'pass' if row.passed else 'FAIL'}  {row.note}")

print("\n== determinism ==")
cfg = parse_config(OFFSET_SPHERE, "grazing_scan", seed=5)
a, b = run_suite(cfg).to_json(), run_suite(cfg).to_json()
print(f"two runs byte-identical: {a == b}; rows: {len(json.loads(a)['rows'])}")

print("\n== seminorm sampling ==")
params = KernelParams(c=0.5, beta=0.45, varpi=1.0, vartheta=0.2)
sphere = ConvexObstacle.sphere((0, 0, 0), 1.0)
smooth = VelocityField(
    lambda x, V: np.exp(-np.sum(np.atleast_2d(V)**2, -1)) * np.sin(np.asarray(x)[..., 0]),
    1.0)
est = estimate_seminorm(sphere, params, smooth, "H_sp", s=0.1, n_pairs=100, seed=0)
print(f"H_sp of a smooth field: {est.value:.4f} over {est.n_pairs} pairs")

print("\n== one mild-formulation sweep at equilibrium ==")
rep = picard_sweep(sphere, params, sqrt_maxwellian(), n_iter=1, n_points=8,
                   horizon=0.05, seed=1, resolution=0.5)
print(f"sup residual over {rep.points} states: {rep.sup_residual:.2e} "
      "(equilibrium is a fixed point up to quadrature error)")
