"""Finite-dimensional laboratory for integral and p-norm reproducing kernel Banach
spaces of one-hidden-layer networks: norms as convex programs, TV-regularized
training, and numerical checks of the norm identities between them.
"""
from .activation import (ActivationFamily, ActivationMatrix, assemble_matrix, eval_activation,
                         extend_product, matrix_from_csv, matrix_to_csv, spectrum)
from .errors import (AlignmentError, BudgetExceeded, DimensionError, EmptyInputError,
                     NotAbsolutelyContinuous, NotRepresentable, PartitionNotCovering,
                     RKBSLabError, SolverFailure, UnsupportedExponent, UnsupportedFamily,
                     UnsupportedLoss)
from .learn import (LossSpec, RepresenterSolution, TrainConfig, extract_representer,
                    hypothesis_optimum, lambda_max, train_tv, verify_reformulation)
from .oracle import oracle_eigensolve, oracle_min_l1, oracle_subgradient
from .rkbs import (GramMatrix, VerificationReport, gram_matrix, integral_norm, pnorm_rkbs_norm,
                   rkhs_norm, sum_kernel, sum_rkbs_norm, verify_compatibility,
                   verify_decomposition, verify_inclusion, verify_kernel)
from .solvers import SolveReport, SolverOptions, min_l1_interpolate, min_l2_interpolate
from .spaces import (DensityVector, DiscreteMeasure, ParameterGrid, ParameterPoint,
                     ProbabilityWeights, SampleFunction, SamplePoint, SingularPartition,
                     lp_norm, tv_norm)

__version__ = "0.1.0"

__all__ = [
    "ActivationFamily", "ActivationMatrix", "AlignmentError", "BudgetExceeded", "DensityVector",
    "DimensionError", "DiscreteMeasure", "EmptyInputError", "GramMatrix", "LossSpec",
    "NotAbsolutelyContinuous", "NotRepresentable", "ParameterGrid", "ParameterPoint",
    "PartitionNotCovering", "ProbabilityWeights", "RKBSLabError", "RepresenterSolution",
    "SampleFunction", "SamplePoint", "SingularPartition", "SolveReport", "SolverFailure",
    "SolverOptions", "TrainConfig", "UnsupportedExponent", "UnsupportedFamily", "UnsupportedLoss",
    "VerificationReport", "assemble_matrix", "eval_activation", "extend_product",
    "extract_representer", "gram_matrix", "hypothesis_optimum", "integral_norm", "lambda_max",
    "lp_norm", "matrix_from_csv", "matrix_to_csv", "min_l1_interpolate", "min_l2_interpolate",
    "oracle_eigensolve", "oracle_min_l1", "oracle_subgradient", "pnorm_rkbs_norm", "rkhs_norm",
    "spectrum", "sum_kernel", "sum_rkbs_norm", "train_tv", "tv_norm", "verify_compatibility",
    "verify_decomposition", "verify_inclusion", "verify_kernel", "verify_reformulation",
]
