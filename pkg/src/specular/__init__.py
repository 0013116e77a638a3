"""Billiard characteristics outside a uniformly convex obstacle, the
hard-sphere collision machinery acting on them, and seeded verification
suites for the quantitative bounds both satisfy."""

from .characteristics import (
    BounceEvent,
    FlowJacobians,
    PhaseState,
    SingularJacobianError,
    backward_exit,
    flow,
    flow_jacobians,
    post_bounce_velocity,
    reflect,
)
from .collision import (
    KernelParams,
    VelocityField,
    collision_frequency,
    gain_carleman,
    gain_carleman_with_budget,
    gaussian_field,
    kernel_kc,
    kernel_kc_pair,
    negativity_check,
    singular_velocity_integral,
    specular_symmetry_check,
    sqrt_maxwellian,
)
from .geometry import (
    ConvexObstacle,
    LevelSample,
    convexity_margin,
    evaluate_level_set,
    outward_unit_normal,
)
from .shiftframe import (
    CrossSection,
    DegenerateShiftError,
    Plane,
    ShiftFrame,
    build_frame,
    cross_section,
    shift_position,
    shift_velocity,
)
from .singularity import (
    SingularityProfile,
    average_inverse_singularity,
    build_profile,
    hit_window_average,
    ode_residual,
    quotient_bounds,
    singularity_sp,
    singularity_vel,
)

__version__ = "0.1.0"
