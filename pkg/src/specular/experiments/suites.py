"""The verification suites behind the CLI.

Each suite draws seeded samples, measures the left and right sides of the
bounds it is responsible for, fits constants as maxima over samples with a
refinement delta, and emits a deterministic report.  Samples excluded by an
indicator are recorded as inapplicable, never as failures.
"""

from __future__ import annotations

import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from ..characteristics import backward_exit, flow, flow_jacobians
from ..collision import (
    KernelParams,
    VelocityField,
    collision_frequency,
    gain_carleman,
    gaussian_field,
    kernel_kc,
    negativity_check_batch,
    singular_velocity_integral,
    specular_symmetry_check,
    sqrt_maxwellian,
)
from ..geometry import ConvexObstacle, convexity_margin
from ..singularity import (
    _raw_parts,
    average_inverse_singularity,
    build_profile,
    ode_residual,
)
from .config import ConfigError, ExperimentConfig
from .duhamel import duhamel_evaluate, picard_sweep
from .report import ExperimentReport
from .sampling import (
    grazing_family,
    rng_for,
    sample_pair,
    usable_position_frame,
    usable_velocity_frame,
)

__all__ = ["SUITE_RUNNERS", "run_suite"]


def _pmap(fn, indices, jobs: int):
    if jobs <= 1:
        return [fn(i) for i in indices]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunk = max(1, len(indices) // (4 * jobs))
        return list(pool.map(fn, indices, chunksize=chunk))


# -- grazing scan -----------------------------------------------------------------


def run_grazing_scan(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    ob = config.obstacle
    if (ob.kind != "sphere" or not np.allclose(ob.center, [0.0, 1.0, 0.0])
            or not math.isclose(ob.scale, 1.0)):
        raise ConfigError("grazing_scan requires the sphere of radius 1 "
                          "centered at (0, 1, 0)")
    report = ExperimentReport("grazing_scan", config.seed)
    opt = config.options
    v = np.array([1.0, 0.0, 0.0])
    anchor = backward_exit(ob, np.array([1.0, 0.0, 0.0]), v)
    report.add_row("anchor_tangency", float(np.max(np.abs(anchor.x_b))), 1e-12,
                   anchor.hit and float(np.max(np.abs(anchor.x_b))) <= 1e-12,
                   inputs=("eps", 0.0))

    eps_list, gaps = [], []
    for k in range(int(opt["k_min"]), int(opt["k_max"]) + 1):
        eps = 2.0 ** -k
        ev = backward_exit(ob, np.array([1.0, eps, 0.0]), v)
        target = math.sqrt(2 * eps - eps * eps)
        tangential = float((ev.x_b - anchor.x_b) @ v)
        err = abs(tangential - target)
        report.add_row(f"tangential_gap_k{k}", err, opt["tol_tangential"],
                       err <= opt["tol_tangential"], inputs=("eps", eps))
        gap = float(np.linalg.norm(ev.x_b - anchor.x_b))
        eps_list.append(eps)
        gaps.append(gap)
        report.samples.append((f"eps_2^-{k}", eps, gap, target))

    slope = float(np.polyfit(np.log(eps_list), np.log(gaps), 1)[0])
    window = opt["slope_window"]
    report.add_row("holder_slope", abs(slope - 0.5), window,
                   abs(slope - 0.5) <= window, inputs=("slope", slope),
                   note=f"slope={slope:.6f}")
    report.counts = {"eps_points": len(eps_list)}
    return report


# -- jacobian finite differences ----------------------------------------------------


def _fd_jacobian(func, z, h):
    cols = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        cols.append((np.asarray(func(z + e)) - np.asarray(func(z - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def _jacobian_state_error(obstacle: ConvexObstacle, fd_step: float, seed: int,
                          index: int) -> float:
    rng = rng_for(seed, index)
    while True:
        x = obstacle.center + rng.uniform(-2.4, 2.4, size=3) * obstacle.bounding_radius
        if obstacle.level(x) > -1e-2:
            continue
        v = (x - obstacle.center) + 0.8 * rng.standard_normal(3)
        ev = backward_exit(obstacle, x, v)
        if not ev.hit:
            continue
        speed = np.linalg.norm(v)
        if abs(ev.incidence) < 5e-2 * speed * np.linalg.norm(ev.normal_grad):
            continue
        break
    t = ev.t_b + 0.4
    s = 0.2
    jac = flow_jacobians(obstacle, t, x, v, s)

    def unit_g(e):
        g = np.asarray(e, float)
        return g / np.linalg.norm(g)

    blocks = {
        "dtb_dx": _fd_jacobian(lambda z: backward_exit(obstacle, z, v).t_b, x, fd_step),
        "dxb_dx": _fd_jacobian(lambda z: backward_exit(obstacle, z, v).x_b, x, fd_step),
        "dn_dx": _fd_jacobian(lambda z: unit_g(backward_exit(obstacle, z, v).normal_grad),
                              x, fd_step),
        "dV_dx": _fd_jacobian(lambda z: flow(obstacle, t, z, v, s).v, x, fd_step),
        "dX_dx": _fd_jacobian(lambda z: flow(obstacle, t, z, v, s).x, x, fd_step),
        "dtb_dv": _fd_jacobian(lambda w: backward_exit(obstacle, x, w).t_b, v, fd_step),
        "dxb_dv": _fd_jacobian(lambda w: backward_exit(obstacle, x, w).x_b, v, fd_step),
        "dV_dv": _fd_jacobian(lambda w: flow(obstacle, t, x, w, s).v, v, fd_step),
        "dX_dv": _fd_jacobian(lambda w: flow(obstacle, t, x, w, s).x, v, fd_step),
    }
    worst = 0.0
    for name, fd in blocks.items():
        exact = getattr(jac, name)
        denom = max(np.max(np.abs(exact)), 1.0)
        worst = max(worst, float(np.max(np.abs(fd - exact)) / denom))
    return worst


def run_jacobian_fd(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    report = ExperimentReport("jacobian_fd", config.seed)
    opt = config.options
    ob = config.obstacle

    jac = flow_jacobians(ConvexObstacle.sphere((0, 0, 0), 1.0), 2.0,
                         (2.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.0)
    report.add_row("radial_dtb_dx", float(np.max(np.abs(jac.dtb_dx - [1, 0, 0]))),
                   1e-12, bool(np.allclose(jac.dtb_dx, [1, 0, 0], atol=1e-12)))
    report.add_row("radial_dtb_dv_identity",
                   float(np.max(np.abs(jac.dtb_dv + jac.dtb_dx))), 1e-15,
                   bool(np.array_equal(jac.dtb_dv, -1.0 * jac.dtb_dx)))

    worker = partial(_jacobian_state_error, ob, opt["fd_step"], config.seed)
    errors = _pmap(worker, list(range(int(opt["n_states"]))), jobs)
    worst = float(np.max(errors))
    report.add_row("fd_match_max_rel_error", worst, opt["tol"], worst <= opt["tol"],
                   inputs=("n", opt["n_states"]))
    report.counts = {"states": int(opt["n_states"])}
    report.samples = [(f"state_{i}", float(e)) for i, e in enumerate(errors)]
    return report


# -- Holder trajectory suite ---------------------------------------------------------


def _holder_pair_rows(obstacle: ConvexObstacle, seed: int, index: int):
    rng = rng_for(seed, index)
    (x, v), (xbar, vbar) = sample_pair(obstacle, rng)
    ev = backward_exit(obstacle, x, v)
    evb = backward_exit(obstacle, xbar, vbar)
    grad_sup = 2.0 * math.sqrt(np.max(np.linalg.eigvalsh(obstacle.matrix))
                               * obstacle.scale)
    dx = float(np.linalg.norm(x - xbar))
    dv = float(np.linalg.norm(v - vbar))
    out = {}
    if ev.hit and evb.hit:
        lhs = max(np.linalg.norm(v), np.linalg.norm(vbar)) * abs(ev.t_b - evb.t_b)
        rhs = math.sqrt(grad_sup) * (math.sqrt(dx) + max(math.sqrt(ev.t_b),
                                                         math.sqrt(evb.t_b)) * math.sqrt(dv))
        out["tb"] = (lhs, rhs)
    t = max([1.0] + [e.t_b for e in (ev, evb) if e.hit]) + 0.5
    s = float(rng.uniform(0.0, t))
    st = flow(obstacle, t, x, v, s)
    stb = flow(obstacle, t, xbar, vbar, s)
    bracket = math.sqrt(1.0 + float(v @ v))
    root = math.sqrt(dx) + math.sqrt(t - s) * math.sqrt(dv) if dv > 0 or dx > 0 else 0.0
    lhs_x = float(np.linalg.norm(st.x - stb.x))
    rhs_x = (1.0 + bracket * (t - s)) * root
    out["X"] = (lhs_x, rhs_x)
    t1 = t - ev.t_b if ev.hit else -math.inf
    t1b = t - evb.t_b if evb.hit else -math.inf
    if s <= min(t1, t1b) or s > max(t1, t1b):
        lhs_v = float(np.linalg.norm(st.v - stb.v))
        rhs_v = dv + bracket * root
        out["V"] = (lhs_v, rhs_v)
    return out


def _grazing_exponent(obstacle: ConvexObstacle, seed: int, index: int,
                      k_lo: int = 4, k_hi: int = 20):
    rng = rng_for(seed, index)
    x, v, ghat = grazing_family(obstacle, rng)
    anchor = 2.0 ** -24
    base = backward_exit(obstacle, x + anchor * ghat, v)
    if not base.hit:
        return None
    eps, diffs = [], []
    for k in range(k_lo, k_hi + 1):
        e = 2.0 ** -k
        ev = backward_exit(obstacle, x + anchor * ghat + e * ghat, v)
        if not ev.hit:
            continue
        d = abs(ev.t_b - base.t_b) * np.linalg.norm(v)
        if d <= 0:
            continue
        eps.append(e)
        diffs.append(d)
    if len(eps) < 8:
        return None
    return float(np.polyfit(np.log(eps), np.log(diffs), 1)[0])


def _smooth_exponent(obstacle: ConvexObstacle, seed: int, index: int):
    rng = rng_for(seed, index)
    for _ in range(100):
        x = obstacle.center + rng.uniform(-2.4, 2.4, size=3) * obstacle.bounding_radius
        if obstacle.level(x) > -1e-2:
            continue
        v = (x - obstacle.center) + 0.5 * rng.standard_normal(3)
        ev = backward_exit(obstacle, x, v)
        if not ev.hit or abs(ev.incidence) < 0.3:
            continue
        d = rng.standard_normal(3)
        d /= np.linalg.norm(d)
        eps, diffs = [], []
        for k in range(4, 16):
            e = 2.0 ** -k
            ev2 = backward_exit(obstacle, x + e * d, v)
            if not ev2.hit or abs(ev2.t_b - ev.t_b) <= 0:
                break
            eps.append(e)
            diffs.append(abs(ev2.t_b - ev.t_b))
        if len(eps) >= 10:
            return float(np.polyfit(np.log(eps), np.log(diffs), 1)[0])
    return None


def run_holder_trajectory(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    report = ExperimentReport("holder_trajectory", config.seed)
    opt = config.options
    ob = config.obstacle
    n_pairs = int(opt["n_pairs"])

    def fitted(n, base_index):
        worker = partial(_holder_pair_rows, ob, config.seed)
        rows = _pmap(worker, list(range(base_index, base_index + n)), jobs)
        best = {"tb": 0.0, "X": 0.0, "V": 0.0}
        counts = {"tb": 0, "X": 0, "V": 0}
        for row in rows:
            for key, (lhs, rhs) in row.items():
                counts[key] += 1
                if rhs > 0:
                    best[key] = max(best[key], lhs / rhs)
        return best, counts

    base, counts = fitted(n_pairs, 0)
    refined, _ = fitted(2 * n_pairs, 0)
    for key in ("tb", "X", "V"):
        const = report.add_constant(f"C_{key}", base[key], refined[key])
        report.add_row(f"holder_{key}_bounded", refined[key], 50.0,
                       np.isfinite(refined[key]) and refined[key] <= 50.0,
                       note=f"applicable={counts[key]}")
        report.add_row(f"holder_{key}_stable", const.delta_rel, 1.0,
                       const.delta_rel <= 1.0)

    slopes = []
    for i in range(int(opt["n_grazing_configs"])):
        slope = _grazing_exponent(ob, config.seed + 1000, i)
        if slope is not None:
            slopes.append(slope)
        report.samples.append((f"grazing_slope_{i}", slope if slope is not None else np.nan))
    med = float(np.median(slopes))
    report.add_row("grazing_exponent", med, opt["exponent_hi"],
                   opt["exponent_lo"] <= med <= opt["exponent_hi"],
                   note=f"median slope over {len(slopes)} families")

    smooth = []
    for i in range(8):
        slope = _smooth_exponent(ob, config.seed + 2000, i)
        if slope is not None:
            smooth.append(slope)
    med_smooth = float(np.median(smooth))
    report.add_row("smooth_exponent", med_smooth, 1.1,
                   0.9 <= med_smooth <= 1.1,
                   note="linear regime away from grazing")
    report.counts = {"pairs": n_pairs, "grazing_families": len(slopes)}
    return report


# -- ODE suite -----------------------------------------------------------------------


def _ode_frame_counts(obstacle: ConvexObstacle, mode: str, options: dict,
                      theta: float, seed: int, index: int):
    rng = rng_for(seed, index)
    sampler = usable_position_frame if mode == "position" else usable_velocity_frame
    frame = sampler(obstacle, rng)
    if frame is None:
        return 0, 0
    prof = build_profile(frame, int(options["profile_grid"]))
    span = prof.span
    excl = 2.5e-3 * span
    segments = [
        (frame.tau_minus + excl, frame.tau_zero - excl),
        (frame.tau_zero + excl, frame.tau_plus - excl),
    ]
    total, passed = 0, 0
    per_seg = max(1, int(options["taus_per_frame"]) // 2)
    for lo, hi in segments:
        if hi <= lo:
            continue
        for tau in rng.uniform(lo, hi, size=per_seg):
            try:
                check = ode_residual(prof, float(tau), theta_lower=theta)
            except ValueError:
                continue
            total += 1
            if check.residual >= -options["tol"] * check.scale:
                passed += 1
    return total, passed


def run_ode_suite(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    report = ExperimentReport("ode_suite", config.seed)
    opt = config.options
    ob = config.obstacle
    theta = convexity_margin(ob, 64, config.seed)
    per_mode = max(1, int(opt["n_samples"]) // (2 * int(opt["taus_per_frame"])))
    for mode in ("position", "velocity"):
        worker = partial(_ode_frame_counts, ob, mode, opt, theta, config.seed)
        counts = _pmap(worker, list(range(per_mode)), jobs)
        total = sum(c[0] for c in counts)
        passed = sum(c[1] for c in counts)
        rate = passed / max(total, 1)
        report.add_row(f"ode_{mode}_pass_rate", 1.0 - rate, 1.0 - opt["pass_rate"],
                       rate >= opt["pass_rate"] and total >= 0.5 * opt["n_samples"] / 2,
                       inputs=(mode, total), note=f"{passed}/{total}")
        report.counts[f"{mode}_samples"] = total
    report.counts["theta_lower"] = theta
    return report


# -- averaging suite -------------------------------------------------------------------


def _averaging_ratio(obstacle: ConvexObstacle, mode: str, grid: int,
                     seed: int, index: int):
    rng = rng_for(seed, index)
    sampler = usable_position_frame if mode == "position" else usable_velocity_frame
    frame = sampler(obstacle, rng)
    if frame is None:
        return None
    prof = build_profile(frame, grid)
    span = frame.tau_plus - frame.tau_minus
    tau_star = frame.tau_minus + rng.uniform(0.05, 1.0) * span
    try:
        _, ratio = average_inverse_singularity(prof, tau_star)
    except ValueError:
        return None
    # measured version of the incidence growth bound along the curve; it is
    # only claimed for position shifts on the branch left of tau_zero
    growth = None
    if mode == "position" and tau_star <= frame.tau_zero:
        num, _, _, _ = _raw_parts(frame, np.array([tau_star]))
        grad_sup = 2.0 * math.sqrt(np.max(np.linalg.eigvalsh(obstacle.matrix))
                                   * obstacle.scale)
        rate_norm = float(np.linalg.norm(frame.curve_rate(np.array(tau_star))))
        growth = float(num[0]) / (frame.speed * math.sqrt(rate_norm * grad_sup)
                                  * math.sqrt(tau_star - frame.tau_minus))
    return ratio, growth


def run_averaging_suite(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    report = ExperimentReport("averaging_suite", config.seed)
    opt = config.options
    ob = config.obstacle
    n = int(opt["n_frames"]) // 2
    grid = int(opt["grid"])
    for mode in ("position", "velocity"):
        def fitted(count, grid_size):
            worker = partial(_averaging_ratio, ob, mode, grid_size, config.seed)
            vals = [r for r in _pmap(worker, list(range(count)), jobs) if r is not None]
            ratios = [v[0] for v in vals]
            growths = [v[1] for v in vals if v[1] is not None]
            g_max = float(np.max(growths)) if growths else 0.0
            return float(np.max(ratios)), g_max, len(vals)

        c_base, g_base, n_base = fitted(n, grid)
        c_ref, g_ref, _ = fitted(2 * n, 2 * grid)
        const = report.add_constant(f"C_avg_{mode}", c_base, c_ref)
        report.add_row(f"avg_{mode}_finite", c_ref, 100.0,
                       np.isfinite(c_ref) and c_ref <= 100.0,
                       note=f"{n_base} frames")
        report.add_row(f"avg_{mode}_stable", const.delta_rel, opt["drift_tol"],
                       const.delta_rel <= opt["drift_tol"])
        if mode == "position":
            g_const = report.add_constant("C_incidence_growth", g_base, g_ref)
            report.add_row("incidence_growth_stable", g_const.delta_rel,
                           5 * opt["drift_tol"],
                           g_const.delta_rel <= 5 * opt["drift_tol"])
    report.counts = {"frames_per_mode": n}
    return report


# -- integrability suite ----------------------------------------------------------------


def run_integrability_suite(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    report = ExperimentReport("integrability_suite", config.seed)
    opt = config.options
    ob = config.obstacle
    kernel = config.kernel or KernelParams(c=0.5)
    x = ob.boundary_point(np.array([1.0, 0.0, 0.0]))
    n0 = int(opt["n_samples"])

    def doubling(beta: float):
        params = KernelParams(c=kernel.c, beta=beta, varpi=kernel.varpi,
                              vartheta=kernel.vartheta)
        ests = []
        for k, n in enumerate((n0, 2 * n0, 4 * n0)):
            est, _ = singular_velocity_integral(ob, params, x, np.zeros(3), 0.0,
                                                "plain", n_samples=n,
                                                seed=config.seed + k)
            ests.append(est)
        deltas = [abs(ests[i + 1] - ests[i]) / abs(ests[i]) for i in range(2)]
        return ests, deltas

    ests_ok, deltas_ok = doubling(float(opt["beta_ok"]))
    report.add_row("stabilizes_at_beta_ok", max(deltas_ok), opt["drift_tol"],
                   max(deltas_ok) <= opt["drift_tol"],
                   note=f"estimates {['%.4g' % e for e in ests_ok]}")
    ests_bad, deltas_bad = doubling(float(opt["beta_bad"]))
    report.add_row("diverges_at_beta_bad", max(deltas_bad), opt["drift_tol"],
                   max(deltas_bad) > opt["drift_tol"],
                   note=f"estimates {['%.3g' % e for e in ests_bad]}")

    params_ok = KernelParams(c=kernel.c, beta=float(opt["beta_ok"]),
                             vartheta=kernel.vartheta)
    vals, brackets = [], []
    for speed in (0.0, 1.0, 2.0, 4.0):
        v = np.array([0.0, speed / math.sqrt(2), speed / math.sqrt(2)])
        est, _ = singular_velocity_integral(ob, params_ok, x, v, 0.0, "plain",
                                            n_samples=2 * n0, seed=config.seed + 9)
        vals.append(est)
        brackets.append(math.sqrt(1.0 + speed * speed))
        report.samples.append((f"speed_{speed}", est))
    slope = float(np.polyfit(np.log(brackets[1:]), np.log(vals[1:]), 1)[0])
    cap = 0.0 + 1.0 - 2.0 * float(opt["beta_ok"]) + float(opt["slope_margin"])
    report.add_row("growth_slope", slope, cap, slope <= cap,
                   note=f"slope={slope:.4f}")

    est_extra, _ = singular_velocity_integral(ob, params_ok, x, np.zeros(3), 0.0,
                                              "extra_inverse", n_samples=2 * n0,
                                              seed=config.seed + 11)
    report.add_row("extra_inverse_finite", est_extra, 1e6,
                   bool(np.isfinite(est_extra)) and 0.0 < est_extra < 1e6)
    report.counts = {"base_samples": n0}
    return report


# -- collision suite ---------------------------------------------------------------------


def run_collision_suite(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    report = ExperimentReport("collision_suite", config.seed)
    opt = config.options
    if config.kernel is None:
        raise ConfigError("collision_suite needs a [kernel] section")
    params = config.kernel
    ob = config.obstacle
    rng = np.random.default_rng(config.seed)

    mu = sqrt_maxwellian()
    for tag, v in (("0", np.zeros(3)), ("1.5e1", np.array([1.5, 0.0, 0.0]))):
        gain = gain_carleman(params, mu, np.zeros(3), v, "A")
        freq = collision_frequency(mu, np.zeros(3), v)
        target = freq * math.exp(-0.25 * float(v @ v))
        rel = abs(gain - target) / target
        report.add_row(f"equilibrium_v{tag}", rel, opt["tol_eq"],
                       rel <= opt["tol_eq"], inputs=("eq", tag))

    gauss = gaussian_field(1.0)
    worst_ab = 0.0
    for i in range(int(opt["n_velocities"])):
        v = rng.standard_normal(3)
        nv = np.linalg.norm(v)
        if nv > 2.0:
            v *= 2.0 / nv
        a = gain_carleman(params, gauss, np.zeros(3), v, "A")
        b = gain_carleman(params, gauss, np.zeros(3), v, "B")
        worst_ab = max(worst_ab, abs(a - b) / max(abs(a), abs(b)))
        report.samples.append((f"ab_{i}", a, b))
    report.add_row("carleman_ab_agreement", worst_ab, opt["tol_ab"],
                   worst_ab <= opt["tol_ab"])

    g2 = gaussian_field(0.7, amplitude=0.8)
    worst_two = 0.0
    for _ in range(3):
        v = rng.standard_normal(3)
        a = gain_carleman(params, gauss, np.zeros(3), v, "A", second=g2)
        b = gain_carleman(params, gauss, np.zeros(3), v, "B", second=g2)
        worst_two = max(worst_two, abs(a - b) / max(abs(a), abs(b)))
    report.add_row("carleman_ab_two_fields", worst_two, opt["tol_ab"],
                   worst_two <= opt["tol_ab"])

    v_probe = np.array([0.4, -0.2, 0.3])
    base = gain_carleman(params, gauss, np.zeros(3), v_probe, "A")
    fine = gain_carleman(params, gauss, np.zeros(3), v_probe, "A", resolution=1.5)
    budget = abs(base - fine) / abs(fine)
    report.add_row("quadrature_budget", budget, opt["tol_ab"],
                   budget <= opt["tol_ab"], note="resolution 1.0 vs 1.5")

    worst_kern = 0.0
    for _ in range(200):
        n = rng.standard_normal(3)
        n /= np.linalg.norm(n)
        v = rng.standard_normal(3)
        zeta = rng.standard_normal(3)
        rv = v - 2 * (n @ v) * n
        rz = zeta - 2 * (n @ zeta) * n
        a = kernel_kc(params, v, zeta)
        b = kernel_kc(params, rv, rz)
        worst_kern = max(worst_kern, abs(a - b) / a)
    report.add_row("kernel_reflection_invariance", worst_kern, 1e-10,
                   worst_kern <= 1e-10)

    n_neg = int(opt["n_negativity"])
    varpi = params.varpi if params.varpi > 0 else 1.0
    s = 0.9 * (math.sqrt(20.0) - 4.0) * params.c / 2.0 / varpi
    neg_params = KernelParams(c=params.c, beta=params.beta, varpi=varpi,
                              vartheta=params.vartheta)
    v = rng.standard_normal((n_neg, 3)) * 1.5
    dvb = rng.standard_normal((n_neg, 3)) * 0.3
    norm = np.linalg.norm(dvb, axis=-1)
    dvb *= np.minimum(1.0, 0.999 / np.maximum(norm, 1e-12))[:, None]
    zeta = rng.standard_normal((n_neg, 3)) * 1.2
    (p1, p2, p3), (a1, a2, a3) = negativity_check_batch(neg_params, s, v, v + dvb, zeta)
    for name, passed, applicable in (("weight_shift", p1, a1),
                                     ("weight_shift_bar", p2, a2),
                                     ("pair_kernel", p3, a3)):
        fails = int(np.sum(applicable & ~passed))
        report.add_row(f"negativity_{name}", float(fails), 1.0, fails == 0,
                       note=f"{int(np.sum(applicable))} applicable")

    radial = VelocityField(lambda x, V: np.exp(-0.5 * np.sum(np.atleast_2d(V)**2, -1)), 1.0)
    worst_gain, worst_loss = 0.0, 0.0
    for i in range(int(opt["n_symmetry"])):
        d = rng.standard_normal(3)
        xb = ob.boundary_point(d)
        vv = rng.standard_normal(3)
        rg, rl = specular_symmetry_check(params, radial, ob, xb, vv,
                                         resolution=0.75, rng=rng)
        worst_gain = max(worst_gain, rg)
        worst_loss = max(worst_loss, rl)
    report.add_row("specular_symmetry_gain", worst_gain, opt["tol_symmetry"],
                   worst_gain <= opt["tol_symmetry"])
    report.add_row("specular_symmetry_loss", worst_loss, opt["tol_symmetry"],
                   worst_loss <= opt["tol_symmetry"])
    report.counts = {"negativity_samples": n_neg}
    return report


# -- duhamel toy suite -------------------------------------------------------------------


def run_duhamel_toy(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    report = ExperimentReport("duhamel_toy", config.seed)
    opt = config.options
    if config.kernel is None:
        raise ConfigError("duhamel_toy needs a [kernel] section")
    params = config.kernel
    ob = config.obstacle
    horizon = float(opt["horizon"])
    mu = sqrt_maxwellian()
    zero = VelocityField(lambda x, V: np.zeros(np.atleast_2d(V).shape[:-1]), 0.0)

    x = ob.boundary_point(np.array([1.0, 0.2, 0.0])) * 1.8
    vel = np.array([1.0, 0.1, -0.2])
    val = duhamel_evaluate(ob, params, lambda s: zero, mu, horizon, x, vel,
                           int(opt["time_nodes"]), float(opt["resolution"]))
    st = flow(ob, horizon, x, vel, 0.0)
    exact = float(np.exp(-0.25 * st.v @ st.v))
    report.add_row("pure_transport_exact", abs(val - exact), 1e-12,
                   abs(val - exact) <= 1e-12)

    rep = picard_sweep(ob, params, mu, int(opt["n_iter"]), int(opt["n_points"]),
                       horizon, config.seed, int(opt["time_nodes"]),
                       float(opt["resolution"]))
    report.add_row("equilibrium_sweep_residual", rep.sup_residual,
                   opt["residual_tol"], rep.residuals[0] <= opt["residual_tol"],
                   note=f"residuals {['%.2e' % r for r in rep.residuals]}")

    # damping factor monotone in t for nonnegative data
    damps = []
    for t in np.linspace(horizon / 4, horizon, 4):
        event = backward_exit(ob, x, vel, t=t)
        nodes, weights = np.polynomial.legendre.leggauss(8)
        total = 0.0
        cuts = [0.0, t] if not (event.hit and 0 < event.t1 < t) else [0.0, event.t1, t]
        for a, b in zip(cuts[:-1], cuts[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            for nd, w in zip(mid + half * nodes, half * weights):
                stt = flow(ob, t, x, vel, float(nd))
                total += w * collision_frequency(mu, stt.x, stt.v,
                                                 resolution=float(opt["resolution"]))
        damps.append(math.exp(-total))
    ok = all(0.0 < d <= 1.0 for d in damps) and all(
        damps[i + 1] <= damps[i] + 1e-12 for i in range(len(damps) - 1))
    report.add_row("damping_monotone", float(damps[-1]), 1.0, ok,
                   note=f"factors {['%.4f' % d for d in damps]}")
    report.counts = {"points": int(opt["n_points"])}
    return report


SUITE_RUNNERS = {
    "grazing_scan": run_grazing_scan,
    "jacobian_fd": run_jacobian_fd,
    "holder_trajectory": run_holder_trajectory,
    "ode_suite": run_ode_suite,
    "averaging_suite": run_averaging_suite,
    "integrability_suite": run_integrability_suite,
    "collision_suite": run_collision_suite,
    "duhamel_toy": run_duhamel_toy,
}


def run_suite(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    runner = SUITE_RUNNERS[config.suite]
    start = time.perf_counter()
    report = runner(config, jobs=jobs)
    report.wall_time_s = time.perf_counter() - start
    report.config_digest = hashlib.sha256(config.raw_text.encode()).hexdigest()[:12]
    return report
