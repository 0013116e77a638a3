"""Uniformly convex obstacles described by polynomial level sets.

An obstacle is the superlevel set {xi > 0} of a concave quadratic
polynomial; the gas moves in the exterior region {xi < 0}.  Restricting to
quadratic level sets keeps every derivative exact and reduces all ray
intersections to quadratic equations.

Conventions fixed here:

* sphere:    xi(x) = r^2 - |x - c|^2
* ellipsoid: xi(x) = 1 - sum_i (x_i - c_i)^2 / a_i^2
* quadric:   xi(x) = 1 - (x - c)^T A (x - c),  A symmetric positive definite

The unit vector grad(xi)/|grad(xi)| points *into* the obstacle, i.e. out of
the gas region.  All reflection formulas use grad(xi) directly, so only the
documented orientation (not any downstream formula) depends on this choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConvexObstacle",
    "LevelSample",
    "NotConvexError",
    "NotOnBoundaryError",
    "convexity_margin",
    "evaluate_level_set",
    "outward_unit_normal",
]


class NotOnBoundaryError(ValueError):
    """The queried point is not on {xi = 0} within the boundary tolerance."""


class NotConvexError(ValueError):
    """A sampled Hessian of -xi has a non-positive eigenvalue."""


@dataclass(frozen=True)
class LevelSample:
    """Level-set value with its first two derivatives at one point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True)
class ConvexObstacle:
    """A uniformly convex obstacle, stored as xi(x) = scale - (x-c)^T A (x-c).

    ``theta_lower`` is the uniform convexity constant: the smallest
    eigenvalue of -hess(xi) = 2A.  ``bounding_radius`` is the radius of a
    ball around ``center`` containing the obstacle.
    """

    kind: str
    center: np.ndarray
    matrix: np.ndarray
    scale: float
    theta_lower: float = field(init=False)
    bounding_radius: float = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3)
        a = np.asarray(self.matrix, dtype=float).reshape(3, 3)
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
            raise ValueError("quadratic form matrix must be symmetric")
        eigs = np.linalg.eigvalsh(a)
        if eigs[0] <= 0.0:
            raise NotConvexError("quadratic form matrix must be positive definite")
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "matrix", 0.5 * (a + a.T))
        object.__setattr__(self, "theta_lower", 2.0 * float(eigs[0]))
        object.__setattr__(self, "bounding_radius", float(np.sqrt(self.scale / eigs[0])))

    # -- constructors ------------------------------------------------------

    @classmethod
    def sphere(cls, center, radius: float) -> "ConvexObstacle":
        if radius <= 0.0:
            raise ValueError("radius must be positive")
        return cls("sphere", np.asarray(center, dtype=float), np.eye(3), float(radius) ** 2)

    @classmethod
    def ellipsoid(cls, center, semi_axes) -> "ConvexObstacle":
        ax = np.asarray(semi_axes, dtype=float).reshape(3)
        if np.any(ax <= 0.0):
            raise ValueError("semi-axes must be positive")
        return cls("ellipsoid", np.asarray(center, dtype=float), np.diag(1.0 / ax**2), 1.0)

    @classmethod
    def quadric(cls, matrix, center) -> "ConvexObstacle":
        return cls("quadric", np.asarray(center, dtype=float), np.asarray(matrix, dtype=float), 1.0)

    # -- level set ---------------------------------------------------------

    @property
    def boundary_tolerance(self) -> float:
        # scale-aware absolute test on |xi|
        return 1e-9 * (1.0 + self.bounding_radius**2)

    def level(self, x) -> float:
        y = np.asarray(x, dtype=float) - self.center
        return float(self.scale - y @ self.matrix @ y)

    def level_batch(self, x: np.ndarray) -> np.ndarray:
        y = np.asarray(x, dtype=float) - self.center
        return self.scale - np.einsum("...i,ij,...j->...", y, self.matrix, y)

    def grad(self, x) -> np.ndarray:
        y = np.asarray(x, dtype=float) - self.center
        return -2.0 * (y @ self.matrix)

    def grad_batch(self, x: np.ndarray) -> np.ndarray:
        y = np.asarray(x, dtype=float) - self.center
        return -2.0 * np.einsum("...i,ij->...j", y, self.matrix)

    def hess(self) -> np.ndarray:
        return -2.0 * self.matrix

    def boundary_point(self, direction) -> np.ndarray:
        """Boundary point hit by the ray from the center along ``direction``."""
        d = np.asarray(direction, dtype=float)
        t = np.sqrt(self.scale / (d @ self.matrix @ d))
        return self.center + t * d


def evaluate_level_set(obstacle: ConvexObstacle, x) -> LevelSample:
    """xi, grad(xi) and hess(xi) at ``x``, all analytic."""
    return LevelSample(obstacle.level(x), obstacle.grad(x), obstacle.hess())


def outward_unit_normal(obstacle: ConvexObstacle, x) -> np.ndarray:
    """Unit vector grad(xi)/|grad(xi)| at a boundary point.

    For the level sets used here this points into the obstacle (out of the
    gas region).  Rejects points that are not on the boundary, which always
    signals a caller bug.
    """
    value = obstacle.level(x)
    if abs(value) > obstacle.boundary_tolerance:
        raise NotOnBoundaryError(
            f"|xi(x)| = {abs(value):.3e} exceeds boundary tolerance "
            f"{obstacle.boundary_tolerance:.3e}"
        )
    g = obstacle.grad(x)
    return g / np.linalg.norm(g)


def convexity_margin(obstacle: ConvexObstacle, n_samples: int, seed: int) -> float:
    """Smallest eigenvalue of -hess(xi) over sampled boundary points.

    Deterministic given ``seed``.  Raises :class:`NotConvexError` if any
    sampled Hessian fails uniform convexity.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    margin = np.inf
    for _ in range(n_samples):
        d = rng.standard_normal(3)
        d /= np.linalg.norm(d)
        x = obstacle.boundary_point(d)
        neg_hess = -evaluate_level_set(obstacle, x).hessian
        lo = float(np.linalg.eigvalsh(neg_hess)[0])
        if lo <= 0.0:
            raise NotConvexError(f"non-positive eigenvalue {lo} at boundary sample")
        margin = min(margin, lo)
    return margin
