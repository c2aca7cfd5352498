"""In-house convex solvers used by the norm, training and verification layers."""
from .block import block_min_norm
from .interpolate import (least_squares_residual, min_l1_interpolate, min_l2_interpolate,
                          weighted_l1_interpolate, weighted_l2_interpolate)
from .options import SolveReport, SolverOptions
from .proxgrad import (hinge_lasso_lp, lasso_kkt, prox_grad_group, prox_grad_lasso,
                       soft_threshold, group_shrink)
from .simplex import solve_lp, solve_standard

__all__ = [
    "SolveReport", "SolverOptions", "block_min_norm", "group_shrink", "hinge_lasso_lp",
    "lasso_kkt", "least_squares_residual", "min_l1_interpolate", "min_l2_interpolate",
    "prox_grad_group", "prox_grad_lasso", "soft_threshold", "solve_lp", "solve_standard",
    "weighted_l1_interpolate", "weighted_l2_interpolate",
]
