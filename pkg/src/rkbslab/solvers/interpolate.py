"""Minimum-norm interpolation: TV (basis pursuit) and pi-weighted L2."""
from __future__ import annotations

import numpy as np

from ..activation import as_matrix
from ..errors import AlignmentError, NotRepresentable
from ..spaces import DensityVector, DiscreteMeasure, ProbabilityWeights, lp_norm
from .options import SolveReport, SolverOptions
from .simplex import _row_reduce, weighted_l1_min


def _target(f) -> np.ndarray:
    return np.asarray(getattr(f, "values", f), dtype=float).reshape(-1)


def _feasibility_tol(f: np.ndarray, opts: SolverOptions) -> float:
    return opts.feas_tol * (1.0 + float(np.linalg.norm(f)))


def least_squares_residual(M, f, opts: SolverOptions = SolverOptions()) -> float:
    """Distance from ``f`` to the numerical column space used by the LP solver."""
    return _row_reduce(np.asarray(M, dtype=float), _target(f), opts)[3]


def weighted_l1_interpolate(M, f, cost, opts: SolverOptions = SolverOptions()):
    """``min sum_j cost_j |x_j|`` s.t. ``M x = f`` as a basic optimal solution."""
    M = np.asarray(M, dtype=float)
    f = _target(f)
    if M.shape[0] != f.size:
        raise AlignmentError(f"matrix has {M.shape[0]} rows, target has {f.size} entries")
    x, dual, lp = weighted_l1_min(M, f, cost, opts)
    residual = float(np.linalg.norm(M @ x - f))
    ok = lp.status == "optimal" and residual <= opts.feas_tol
    status = "optimal" if ok else ("max_iters" if lp.status == "max_iters" else "infeasible")
    objective = float(np.sum(np.asarray(cost) * np.abs(x)))
    return x, SolveReport(objective, lp.iterations, residual, status, dual)


def min_l1_interpolate(A, f, opts: SolverOptions = SolverOptions()):
    """Minimum total-variation measure with ``A mu = f``.

    The solution is an LP vertex, so it has at most ``n`` nonzero atoms; the
    objective is the integral-RKBS norm of ``f`` on this grid.
    """
    A = as_matrix(A)
    x, report = weighted_l1_interpolate(A, f, np.ones(A.shape[1]), opts)
    return DiscreteMeasure(x), report


def weighted_l2_interpolate(A, f, w, opts: SolverOptions = SolverOptions()):
    """Minimum ``sum_j w_j h_j^2`` subject to ``sum_j w_j A[:, j] h_j = f``, for ``w >= 0``.

    Returns ``(h, residual)``.  Computed with a truncated-SVD pseudoinverse of
    ``A diag(sqrt(w))``; singular values below ``svd_cutoff_ratio * s_max``
    count as zero.  Atoms with ``w_j = 0`` get ``h_j = 0``.
    """
    A = np.asarray(A, dtype=float)
    f = _target(f)
    if A.shape[0] != f.size:
        raise AlignmentError(f"matrix has {A.shape[0]} rows, target has {f.size} entries")
    root = np.sqrt(np.asarray(w, dtype=float))
    M = A * root[None, :]
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > opts.svd_cutoff_ratio * s[0])) if s.size and s[0] > 0 else 0
    g = Vt[:r].T @ ((U[:, :r].T @ f) / s[:r])
    residual = float(np.linalg.norm(M @ g - f))
    if residual > _feasibility_tol(f, opts):
        raise NotRepresentable("target is not in the range of the weighted operator", residual)
    h = np.zeros_like(g)
    pos = root > 0
    h[pos] = g[pos] / root[pos]
    return h, residual


def min_l2_interpolate(A, f, pi, opts: SolverOptions = SolverOptions()):
    """Minimum ``L2(pi)`` density ``h`` with ``sum_j pi_j A[:, j] h_j = f``."""
    A = as_matrix(A)
    pi = pi if isinstance(pi, ProbabilityWeights) else ProbabilityWeights(pi)
    if pi.size != A.shape[1]:
        raise AlignmentError("probability weights must align with the matrix columns")
    h, residual = weighted_l2_interpolate(A, f, pi.weights, opts)
    density = DensityVector(h)
    return density, SolveReport(lp_norm(density, pi, 2), 1, residual, "optimal")
