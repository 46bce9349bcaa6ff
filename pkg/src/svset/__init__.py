"""Set-valued martingales on finite trees and Brownian filtrations: polytope
kernels, normal fans and type cones, scenario-tree audits and Monte Carlo tests."""

__version__ = "0.1.0"

from .errors import (
    AdmissibilityError,
    DegeneracyError,
    DimensionMismatchError,
    EnumerationGuardError,
    FanError,
    MalformedInputError,
    NumericalFailureError,
    SvsetError,
)
from .fans import (
    Fan,
    TypeCone,
    alpha_coefficients,
    deterministic_fan_test,
    fans_equal,
    is_admissible,
    normal_fan_2d,
    type_cone,
)
from .geometry import (
    DirectionGrid,
    Polytope,
    hausdorff_direction_grid,
    hausdorff_distance,
    minkowski_average,
    min_norm_point,
    support_function,
    v_to_h_2d,
)
from .paths import brownian_paths, exponential_martingale
from .simulate import (
    Integrand,
    PolytopeTrajectory,
    finite_integral_snapshot,
    mc_supremum_test,
    path_regularity_report,
    trajectory_integral,
    triangle_process,
)
from .tree import (
    ScenarioTree,
    cond_expect_polytope,
    cond_expect_vector,
    hull_vs_conditional,
    martingale_audit,
    randomization_identity,
)
