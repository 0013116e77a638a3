"""Acceptance gate: every criterion at its stated tolerance and budget.

Each test prints one `criterion N: PASS/FAIL` line.  Tolerances and time
budgets are pinned here, not configurable.
"""

import json
import math
import time

import numpy as np

from specular.collision import (
    KernelParams,
    VelocityField,
    collision_frequency,
    gain_carleman,
    gaussian_field,
    negativity_check_batch,
    specular_symmetry_check,
    sqrt_maxwellian,
)
from specular.experiments import parse_config, run_suite
from specular.geometry import ConvexObstacle

OFFSET_SPHERE_CFG = """
[obstacle]
kind = sphere
center = 0 1 0
radius = 1.0
"""

ORIGIN_SPHERE_CFG = """
[obstacle]
kind = sphere
center = 0 0 0
radius = 1.0

[kernel]
c = 0.5
beta = 0.45
varpi = 1.0
vartheta = 0.2
"""

ELLIPSOID_CFG = """
[obstacle]
kind = ellipsoid
center = 0 0 0
semi_axes = 1 2 1

[kernel]
c = 0.5
beta = 0.45
varpi = 1.0
vartheta = 0.2
"""

PARAMS = KernelParams(c=0.5, beta=0.45, varpi=1.0, vartheta=0.2)
UNIT_SPHERE = ConvexObstacle.sphere((0.0, 0.0, 0.0), 1.0)


def report_line(num, label, ok, elapsed, budget, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"criterion {num} ({label}): {status} [{elapsed:.2f}s / {budget:.0f}s] {detail}")


def test_criterion_1_grazing_sqrt_law():
    start = time.perf_counter()
    cfg = parse_config(OFFSET_SPHERE_CFG, "grazing_scan", seed=0)
    rep = run_suite(cfg)
    elapsed = time.perf_counter() - start
    gap_rows = [r for r in rep.rows if r.row_id.startswith("tangential_gap")]
    slope_row = next(r for r in rep.rows if r.row_id == "holder_slope")
    ok = (all(r.passed for r in gap_rows) and len(gap_rows) == 17
          and slope_row.passed and elapsed < 1.0)
    report_line(1, "grazing sqrt-eps law", ok, elapsed, 1,
                f"slope err {slope_row.lhs:.4f}")
    assert all(r.lhs <= 1e-8 for r in gap_rows)
    assert slope_row.lhs <= 0.02
    assert elapsed < 1.0


def test_criterion_2_jacobian_oracle():
    start = time.perf_counter()
    worst = 0.0
    for text in (ORIGIN_SPHERE_CFG, ELLIPSOID_CFG):
        cfg = parse_config(text, "jacobian_fd", seed=1)
        rep = run_suite(cfg)
        row = next(r for r in rep.rows if r.row_id == "fd_match_max_rel_error")
        worst = max(worst, row.lhs)
        assert rep.counts["states"] == 500
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-4 and elapsed < 10.0
    report_line(2, "jacobian finite differences", ok, elapsed, 10,
                f"max rel err {worst:.2e}")
    assert worst <= 1e-4
    assert elapsed < 10.0


def test_criterion_3_carleman_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    gauss = gaussian_field(1.0)
    worst_ab = 0.0
    for _ in range(20):
        v = rng.standard_normal(3)
        nv = np.linalg.norm(v)
        if nv > 2.0:
            v *= 2.0 / nv
        a = gain_carleman(PARAMS, gauss, np.zeros(3), v, "A")
        b = gain_carleman(PARAMS, gauss, np.zeros(3), v, "B")
        worst_ab = max(worst_ab, abs(a - b) / max(abs(a), abs(b)))
    mu = sqrt_maxwellian()
    worst_eq = 0.0
    for v in (np.zeros(3), np.array([1.5, 0.0, 0.0])):
        gain = gain_carleman(PARAMS, mu, np.zeros(3), v, "A")
        target = collision_frequency(mu, np.zeros(3), v) * math.exp(-0.25 * v @ v)
        worst_eq = max(worst_eq, abs(gain - target) / target)
    elapsed = time.perf_counter() - start
    ok = worst_ab <= 1e-3 and worst_eq <= 2e-3 and elapsed < 120.0
    report_line(3, "carleman equivalence", ok, elapsed, 120,
                f"A/B {worst_ab:.2e}, equilibrium {worst_eq:.2e}")
    assert worst_ab <= 1e-3
    assert worst_eq <= 2e-3
    assert elapsed < 120.0


def test_criterion_4_ode_inequalities():
    start = time.perf_counter()
    details = []
    for text in (ORIGIN_SPHERE_CFG, ELLIPSOID_CFG):
        cfg = parse_config(text, "ode_suite", seed=4)
        rep = run_suite(cfg)
        for mode in ("position", "velocity"):
            row = next(r for r in rep.rows if r.row_id == f"ode_{mode}_pass_rate")
            details.append((mode, row))
            assert row.passed, f"{mode}: {row.note}"
    elapsed = time.perf_counter() - start
    ok = elapsed < 60.0
    report_line(4, "specular singularity ODEs", ok, elapsed, 60,
                " ".join(f"{m}:{r.note}" for m, r in details[:2]))
    assert elapsed < 60.0


def test_criterion_5_averaging_bounds():
    start = time.perf_counter()
    cfg = parse_config(ORIGIN_SPHERE_CFG, "averaging_suite", seed=5)
    rep = run_suite(cfg)
    elapsed = time.perf_counter() - start
    consts = {c.name: c for c in rep.fitted_constants}
    drift_sp = consts["C_avg_position"].delta_rel
    drift_vel = consts["C_avg_velocity"].delta_rel
    finite = (np.isfinite(consts["C_avg_position"].refined_value)
              and np.isfinite(consts["C_avg_velocity"].refined_value))
    ok = finite and drift_sp <= 0.05 and drift_vel <= 0.05 and elapsed < 120.0
    report_line(5, "averaged inverse singularity", ok, elapsed, 120,
                f"drifts {drift_sp:.3f}/{drift_vel:.3f}")
    assert finite
    assert drift_sp <= 0.05 and drift_vel <= 0.05
    assert elapsed < 120.0


def test_criterion_6_integrability_threshold():
    start = time.perf_counter()
    cfg = parse_config(ORIGIN_SPHERE_CFG, "integrability_suite", seed=6)
    rep = run_suite(cfg)
    elapsed = time.perf_counter() - start
    stab = next(r for r in rep.rows if r.row_id == "stabilizes_at_beta_ok")
    div = next(r for r in rep.rows if r.row_id == "diverges_at_beta_bad")
    slope = next(r for r in rep.rows if r.row_id == "growth_slope")
    ok = stab.passed and div.passed and slope.passed and elapsed < 120.0
    report_line(6, "integrability threshold", ok, elapsed, 120,
                f"drift_ok {stab.lhs:.3f}, drift_bad {div.lhs:.2g}, slope {slope.lhs:.3f}")
    assert stab.passed and div.passed and slope.passed
    assert elapsed < 120.0


def test_criterion_7_holder_trajectory():
    start = time.perf_counter()
    cfg = parse_config(ORIGIN_SPHERE_CFG, "holder_trajectory", seed=7)
    rep = run_suite(cfg)
    elapsed = time.perf_counter() - start
    exp_row = next(r for r in rep.rows if r.row_id == "grazing_exponent")
    bound_rows = [r for r in rep.rows if r.row_id.endswith("_bounded")]
    stable_rows = [r for r in rep.rows if r.row_id.endswith("_stable")]
    ok = (exp_row.passed and all(r.passed for r in bound_rows)
          and all(r.passed for r in stable_rows) and elapsed < 60.0)
    report_line(7, "holder trajectory bounds", ok, elapsed, 60,
                f"grazing exponent {exp_row.lhs:.3f}")
    assert 0.45 <= exp_row.lhs <= 0.55
    assert all(r.passed for r in bound_rows + stable_rows)
    assert elapsed < 60.0


def test_criterion_8_negativity_and_symmetry():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    s = 0.9 * (math.sqrt(20.0) - 4.0) * PARAMS.c / 2.0 / PARAMS.varpi
    n = 100_000
    v = rng.standard_normal((n, 3)) * 1.5
    dvb = rng.standard_normal((n, 3)) * 0.3
    norm = np.linalg.norm(dvb, axis=-1)
    dvb *= np.minimum(1.0, 0.999 / np.maximum(norm, 1e-12))[:, None]
    zeta = rng.standard_normal((n, 3)) * 1.2
    (p1, p2, p3), (a1, a2, a3) = negativity_check_batch(PARAMS, s, v, v + dvb, zeta)
    neg_ok = (p1[a1].all() and p2[a2].all() and p3[a3].all())

    radial = VelocityField(
        lambda x, V: np.exp(-0.5 * np.sum(np.atleast_2d(V)**2, -1)), 1.0)
    worst_sym = 0.0
    for _ in range(10):
        d = rng.standard_normal(3)
        xb = UNIT_SPHERE.boundary_point(d)
        vv = rng.standard_normal(3)
        rg, rl = specular_symmetry_check(PARAMS, radial, UNIT_SPHERE, xb, vv,
                                         resolution=0.75, rng=rng)
        worst_sym = max(worst_sym, rg, rl)
    elapsed = time.perf_counter() - start
    ok = neg_ok and worst_sym <= 2e-3 and elapsed < 60.0
    report_line(8, "negativity and symmetry", ok, elapsed, 60,
                f"symmetry residual {worst_sym:.2e}")
    assert neg_ok
    assert worst_sym <= 2e-3
    assert elapsed < 60.0


def test_criterion_9_determinism():
    start = time.perf_counter()
    identical = True
    for suite, text in (("grazing_scan", OFFSET_SPHERE_CFG),
                        ("jacobian_fd", ORIGIN_SPHERE_CFG),
                        ("integrability_suite", ORIGIN_SPHERE_CFG)):
        cfg = parse_config(text, suite, seed=9)
        a = run_suite(cfg).to_json()
        b = run_suite(cfg).to_json()
        identical = identical and (a == b)
        json.loads(a)  # stays valid JSON
    elapsed = time.perf_counter() - start
    report_line(9, "byte-identical reports", identical, elapsed, 60)
    assert identical
