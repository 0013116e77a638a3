"""Plain-text experiment configuration.

Format: `[section]` headers with `key = value` lines; `#` starts a comment.
Sections are `[obstacle]`, `[kernel]` and `[suite.<name>]`.  Unknown
sections or keys are hard errors, so a typo cannot silently fall back to a
default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..collision import KernelParams
from ..geometry import ConvexObstacle

SUITES = (
    "grazing_scan",
    "jacobian_fd",
    "holder_trajectory",
    "ode_suite",
    "averaging_suite",
    "integrability_suite",
    "collision_suite",
    "duhamel_toy",
)

_OBSTACLE_KEYS = {"kind", "center", "radius", "semi_axes", "matrix"}
_KERNEL_KEYS = {"c", "beta", "varpi", "vartheta", "truncation_radius"}

# per-suite option keys and defaults; every count >= 1, every tolerance > 0
SUITE_DEFAULTS: dict[str, dict] = {
    "grazing_scan": {"k_min": 4, "k_max": 20, "tol_tangential": 1e-8,
                     "slope_window": 0.02},
    "jacobian_fd": {"n_states": 500, "fd_step": 1e-5, "tol": 1e-4},
    "holder_trajectory": {"n_pairs": 600, "n_grazing_configs": 24,
                          "exponent_lo": 0.45, "exponent_hi": 0.55},
    "ode_suite": {"n_samples": 10_000, "taus_per_frame": 8, "tol": 1e-3,
                  "pass_rate": 0.99, "profile_grid": 129},
    "averaging_suite": {"n_frames": 1000, "grid": 128, "drift_tol": 0.05},
    "integrability_suite": {"n_samples": 100_000, "beta_ok": 0.45,
                            "beta_bad": 0.55, "drift_tol": 0.05,
                            "slope_margin": 0.1},
    "collision_suite": {"n_velocities": 20, "tol_ab": 1e-3, "tol_eq": 2e-3,
                        "n_negativity": 100_000, "n_symmetry": 10,
                        "tol_symmetry": 2e-3},
    "duhamel_toy": {"horizon": 0.05, "n_points": 48, "n_iter": 1,
                    "time_nodes": 16, "resolution": 0.5,
                    "residual_tol": 5e-3},
}


class ConfigError(ValueError):
    """Malformed configuration (unknown keys, bad values, missing sections)."""


@dataclass
class ExperimentConfig:
    suite: str
    obstacle: ConvexObstacle
    kernel: KernelParams | None
    options: dict
    seed: int = 0
    raw_text: str = ""

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; see list-suites")
        for key, val in self.options.items():
            if key.startswith("n_") and val < 1:
                raise ConfigError(f"count {key} must be >= 1")
            if key.startswith("tol") and val <= 0:
                raise ConfigError(f"tolerance {key} must be positive")


def _parse_value(text: str):
    parts = text.split()
    if len(parts) > 1:
        try:
            return [float(p) for p in parts]
        except ValueError as exc:
            raise ConfigError(f"cannot parse list value {text!r}") from exc
    token = parts[0]
    for cast in (int, float):
        try:
            return cast(token)
        except ValueError:
            continue
    return token


def _parse_sections(text: str) -> dict[str, dict]:
    sections: dict[str, dict] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in sections:
                raise ConfigError(f"duplicate section [{current}] (line {lineno})")
            sections[current] = {}
            continue
        if current is None:
            raise ConfigError(f"key outside a section (line {lineno})")
        if "=" not in line:
            raise ConfigError(f"expected key = value (line {lineno})")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]")
        sections[current][key] = _parse_value(value.strip())
    return sections


def _build_obstacle(spec: dict) -> ConvexObstacle:
    unknown = set(spec) - _OBSTACLE_KEYS
    if unknown:
        raise ConfigError(f"unknown obstacle keys: {sorted(unknown)}")
    kind = spec.get("kind")
    center = spec.get("center", [0.0, 0.0, 0.0])
    if isinstance(center, (int, float)):
        raise ConfigError("obstacle.center needs three components")
    if kind == "sphere":
        if "radius" not in spec:
            raise ConfigError("sphere needs obstacle.radius")
        return ConvexObstacle.sphere(center, float(spec["radius"]))
    if kind == "ellipsoid":
        if "semi_axes" not in spec:
            raise ConfigError("ellipsoid needs obstacle.semi_axes")
        return ConvexObstacle.ellipsoid(center, spec["semi_axes"])
    if kind == "quadric":
        if "matrix" not in spec:
            raise ConfigError("quadric needs obstacle.matrix (9 numbers)")
        return ConvexObstacle.quadric(np.asarray(spec["matrix"]).reshape(3, 3), center)
    raise ConfigError(f"unknown obstacle kind {kind!r}")


def _build_kernel(spec: dict) -> KernelParams:
    unknown = set(spec) - _KERNEL_KEYS
    if unknown:
        raise ConfigError(f"unknown kernel keys: {sorted(unknown)}")
    try:
        return KernelParams(**{k: float(v) for k, v in spec.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad kernel parameters: {exc}") from exc


def parse_config(text: str, suite: str, seed: int | None = None) -> ExperimentConfig:
    sections = _parse_sections(text)
    known = {"obstacle", "kernel"} | {f"suite.{s}" for s in SUITES}
    unknown = set(sections) - known
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    if "obstacle" not in sections:
        raise ConfigError("missing [obstacle] section")
    obstacle = _build_obstacle(sections["obstacle"])
    kernel = _build_kernel(sections["kernel"]) if "kernel" in sections else None

    options = dict(SUITE_DEFAULTS.get(suite, {}))
    suite_section = sections.get(f"suite.{suite}", {})
    cfg_seed = 0
    for key, val in suite_section.items():
        if key == "seed":
            cfg_seed = int(val)
            continue
        if key not in options:
            raise ConfigError(f"unknown option {key!r} for suite {suite}")
        options[key] = type(options[key])(val) if not isinstance(val, list) else val
    if seed is not None:
        cfg_seed = int(seed)
    return ExperimentConfig(suite, obstacle, kernel, options, cfg_seed, text)


def load_config(path: str, suite: str, seed: int | None = None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), suite, seed)
