"""Small dense convex engines for the precoders."""

from .dual import (
    backtracking_line_search, dual_gradient, dual_gradient_projection,
    dual_gradient_projection_batch, dual_value,
)
from .ipm import find_interior_point, solve_min_norm, solve_min_norm_batch
from .program import (
    FEAS_TOL, KKT_TOL, BatchResult, MinNormProgram, SolverResult, Status, stack_programs,
)
from .scp import (
    InitializationError, feasible_init_norm_floor, feasible_init_norm_floor_batch,
    scp_minimize_with_norm_floor, scp_minimize_with_norm_floor_batch,
)

__all__ = [
    "FEAS_TOL", "KKT_TOL", "BatchResult", "MinNormProgram", "SolverResult", "Status",
    "stack_programs", "find_interior_point", "solve_min_norm", "solve_min_norm_batch",
    "backtracking_line_search", "dual_gradient", "dual_gradient_projection",
    "dual_gradient_projection_batch", "dual_value", "InitializationError",
    "feasible_init_norm_floor", "feasible_init_norm_floor_batch",
    "scp_minimize_with_norm_floor", "scp_minimize_with_norm_floor_batch",
]
