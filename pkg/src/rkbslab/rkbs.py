"""RKBS norms on the sample set, Gram-matrix kernels, and the identity verifiers.

Functions are identified with their value vectors on the samples, so every
norm here is a finite convex program over the atoms of a parameter grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .activation import ActivationFamily, as_matrix, assemble_matrix
from .errors import (AlignmentError, DimensionError, EmptyInputError, NotRepresentable,
                     PartitionNotCovering, RKBSLabError, SolverFailure)
from .spaces import ProbabilityWeights, SingularPartition, check_exponent
from .solvers import (SolverOptions, block_min_norm, min_l1_interpolate, min_l2_interpolate,
                      solve_standard, weighted_l1_interpolate)

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-9


def _values(f) -> np.ndarray:
    return np.asarray(getattr(f, "values", f), dtype=float).reshape(-1)


def _prob(pi) -> ProbabilityWeights:
    return pi if isinstance(pi, ProbabilityWeights) else ProbabilityWeights(pi)


def relative_gap(a: float, b: float, floor: float = 0.0) -> float:
    """``|a - b| / max(floor, |a|, |b|)``, taken as 0 when that scale is 0."""
    scale = max(floor, abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


# ---------------------------------------------------------------- norms

def _certified(report) -> float:
    if not report.optimal:
        raise SolverFailure(f"solver stopped with status {report.status} "
                            f"(primal residual {report.primal_residual:.3g})", report.status)
    return report.objective


def integral_norm(A, f, opts: SolverOptions = SolverOptions()) -> float:
    """Least total variation of a measure on the grid reproducing ``f``."""
    _, report = min_l1_interpolate(A, f, opts)
    return _certified(report)


def pnorm_rkbs_norm(A, f, pi, p, opts: SolverOptions = SolverOptions()) -> float:
    """Least ``L^p(pi)`` norm of a density ``h`` with ``sum_j pi_j A[:, j] h_j = f``."""
    p = check_exponent(p)
    A = as_matrix(A)
    pi = _prob(pi)
    if pi.size != A.shape[1]:
        raise AlignmentError("probability weights must align with the matrix columns")
    if p == 2:
        return min_l2_interpolate(A, f, pi, opts)[1].objective
    _, report = weighted_l1_interpolate(A * pi.weights[None, :], f, pi.weights, opts)
    return _certified(report)


def _nested_l1(mats, f, costs, opts):
    # variables per block: x_i = x_i^+ - x_i^- (cost c_i on both parts) and a free
    # block function f_i; rows: M_i x_i - f_i = 0 for every i, then sum_i f_i = f
    n = f.size
    B = len(mats)
    widths = [2 * M.shape[1] for M in mats]
    N = sum(widths) + n * B
    rows = np.zeros((n * (B + 1), N))
    cost = np.zeros(N)
    free = np.zeros(N, dtype=bool)
    col = 0
    for i, (M, c) in enumerate(zip(mats, costs)):
        w = M.shape[1]
        rows[i * n : (i + 1) * n, col : col + w] = M
        rows[i * n : (i + 1) * n, col + w : col + 2 * w] = -M
        cost[col : col + 2 * w] = np.concatenate([c, c])
        col += 2 * w
    for i in range(B):
        rows[i * n : (i + 1) * n, col : col + n] = -np.eye(n)
        rows[B * n :, col : col + n] = np.eye(n)
        free[col : col + n] = True
        col += n
    rhs = np.concatenate([np.zeros(n * B), f])
    res = solve_standard(rows, rhs, cost, opts, free)
    if res.status == "infeasible":
        raise NotRepresentable("target is not representable by the block sum", res.residual)
    if res.status != "optimal" or res.residual > opts.feas_tol * (1.0 + float(np.linalg.norm(f))):
        raise SolverFailure(f"nested program stopped with status {res.status} "
                            f"(primal residual {res.residual:.3g})", res.status)
    return float(cost @ res.x)


def _nested_l2(mats, f, w_blocks, opts):
    # KKT system of min sum_i h_i' W_i h_i s.t. M_i h_i - f_i = 0, sum_i f_i = f
    n = f.size
    B = len(mats)
    sizes = [M.shape[1] for M in mats]
    nh = sum(sizes)
    nz = nh + n * B
    C = np.zeros((n * (B + 1), nz))
    Q = np.zeros(nz)
    col = 0
    for i, (M, w) in enumerate(zip(mats, w_blocks)):
        C[i * n : (i + 1) * n, col : col + M.shape[1]] = M
        Q[col : col + M.shape[1]] = w
        col += M.shape[1]
    for i in range(B):
        C[i * n : (i + 1) * n, nh + i * n : nh + (i + 1) * n] = -np.eye(n)
        C[B * n :, nh + i * n : nh + (i + 1) * n] = np.eye(n)
    d = np.concatenate([np.zeros(n * B), f])
    # null-space method: z = z0 + N t with C z0 = d, C N = 0, then a weighted
    # least-squares problem in t; this avoids the squared conditioning of the
    # KKT matrix
    U, s, Vt = np.linalg.svd(C)
    r = int(np.sum(s > opts.svd_cutoff_ratio * s[0]))
    z0 = Vt[:r].T @ ((U[:, :r].T @ d) / s[:r])
    residual = float(np.linalg.norm(C @ z0 - d))
    if residual > opts.feas_tol * (1.0 + float(np.linalg.norm(f))):
        raise NotRepresentable("target is not representable by the block sum", residual)
    N = Vt[r:].T
    sq = np.sqrt(Q)
    if N.shape[1]:
        t = np.linalg.lstsq(sq[:, None] * N, -sq * z0, rcond=None)[0]
        z = z0 + N @ t
    else:
        z = z0
    return float(np.linalg.norm(sq * z))


def sum_rkbs_norm(blocks, f, p, mode: str = "joint", opts: SolverOptions = SolverOptions(),
                  weights=None) -> float:
    """Norm of ``f`` in the ``p``-sum of the block spaces.

    ``joint`` solves one minimum-norm program over the direct sum of feature
    spaces.  ``nested`` works in the block functions ``f_i`` with
    ``f = sum_i f_i`` and expands each block norm into its own feature
    variables, so the infimum over decompositions becomes a single convex
    program (an LP for ``p=1``, an equality-constrained QP for ``p=2``).

    Block norms are integral norms for ``p=1`` without ``weights``; otherwise
    they are ``L^p(pi_i)`` norms with ``pi_i`` uniform unless given.
    """
    p = check_exponent(p)
    if mode not in ("joint", "nested"):
        raise RKBSLabError(f"unknown mode {mode!r}")
    mats = [as_matrix(A) for A in blocks]
    if not mats:
        raise EmptyInputError("block list is empty")
    if weights is not None and len(weights) != len(mats):
        raise AlignmentError(f"{len(weights)} weight vectors for {len(mats)} blocks")
    fv = _values(f)
    if any(M.shape[0] != fv.size for M in mats):
        raise AlignmentError("every block must have one row per sample")
    if mode == "joint":
        return _certified(block_min_norm(mats, fv, p, opts, weights)[1])
    if p == 1 and weights is None:
        return _nested_l1(mats, fv, [np.ones(M.shape[1]) for M in mats], opts)
    pis = [ProbabilityWeights.uniform(M.shape[1]) if weights is None or weights[i] is None
           else _prob(weights[i]) for i, M in enumerate(mats)]
    for M, pi in zip(mats, pis):
        if pi.size != M.shape[1]:
            raise AlignmentError("block weights must align with block columns")
    scaled = [M * pi.weights[None, :] for M, pi in zip(mats, pis)]
    if p == 1:
        return _nested_l1(scaled, fv, [pi.weights for pi in pis], opts)
    return _nested_l2(scaled, fv, [pi.weights for pi in pis], opts)


# ---------------------------------------------------------------- kernels

@dataclass(frozen=True)
class GramMatrix:
    """``K[a, b] = sum_j pi_j sigma(x_a, w_j) sigma(x_b, w_j)``."""

    K: np.ndarray

    def __post_init__(self):
        K = np.array(self.K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] == 0:
            raise DimensionError("a Gram matrix must be square and nonempty")
        if np.max(np.abs(K - K.T)) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(K)))):
            raise RKBSLabError("Gram matrix is not symmetric")
        K = 0.5 * (K + K.T)
        if np.linalg.eigvalsh(K)[0] < -PSD_TOL * max(float(np.trace(K)), 1e-300):
            raise RKBSLabError("Gram matrix is not positive semidefinite")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return self.K.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.K if dtype is None else self.K.astype(dtype)


def gram_from_matrix(A, pi) -> GramMatrix:
    A = as_matrix(A)
    pi = _prob(pi)
    if pi.size != A.shape[1]:
        raise AlignmentError("probability weights must align with the matrix columns")
    return GramMatrix((A * pi.weights[None, :]) @ A.T)


def gram_matrix(family: ActivationFamily, samples, atoms, pi) -> GramMatrix:
    """Gram matrix of the ``L^2(pi)`` kernel over the given block atoms."""
    return gram_from_matrix(assemble_matrix(family, samples, atoms), pi)


def rkhs_norm(K, f, opts: SolverOptions = SolverOptions()) -> float:
    """``sqrt(f' K^+ f)`` with eigenvalues below ``(svd_cutoff_ratio)^2 * max`` dropped."""
    K = K.K if isinstance(K, GramMatrix) else GramMatrix(K).K
    fv = _values(f)
    if fv.size != K.shape[0]:
        raise AlignmentError(f"Gram matrix is {K.shape[0]}x{K.shape[0]}, f has {fv.size} entries")
    evals, evecs = np.linalg.eigh(K)
    top = float(evals[-1]) if evals.size else 0.0
    keep = evals > (opts.svd_cutoff_ratio**2) * top if top > 0 else np.zeros(evals.size, bool)
    coef = evecs[:, keep].T @ fv
    residual = float(np.linalg.norm(fv - evecs[:, keep] @ coef))
    if residual > opts.feas_tol * (1.0 + float(np.linalg.norm(fv))):
        raise NotRepresentable("f is not in the range of the kernel matrix", residual)
    return float(np.sqrt(np.sum(coef * coef / evals[keep])))


def sum_kernel(grams) -> GramMatrix:
    """Entrywise sum: the Gram matrix of the 2-sum of the block RKHSs."""
    grams = list(grams)
    if not grams:
        raise EmptyInputError("need at least one Gram matrix")
    mats = [g.K if isinstance(g, GramMatrix) else GramMatrix(g).K for g in grams]
    if len({M.shape for M in mats}) != 1:
        raise DimensionError("Gram matrices differ in size")
    return GramMatrix(np.sum(mats, axis=0))


# ---------------------------------------------------------------- verification

@dataclass
class VerificationReport:
    """Per-instance left/right values of one identity or inequality.

    For equalities ``rel_err`` is :func:`relative_gap` with the suite's
    scale floor; for inequalities ``lhs <= rhs`` it is the violation
    ``max(0, lhs - rhs)``.  ``passed`` is ``max_rel_err <= tolerance``.
    """

    suite: str
    tolerance: float
    instances: list = field(default_factory=list)
    relation: str = "equal"
    floor: float = 0.0

    def add(self, seed, lhs: float, rhs: float, err: Optional[float] = None, **extra) -> None:
        """Record one row; ``err`` overrides the computed discrepancy (vector checks)."""
        lhs, rhs = float(lhs), float(rhs)
        if err is not None:
            err = float(err)
        elif self.relation == "equal":
            err = relative_gap(lhs, rhs, self.floor)
        else:
            err = max(0.0, lhs - rhs)
        if not np.isfinite(err):
            err = float("inf")
        row = {"seed": seed, "lhs": lhs, "rhs": rhs, "abs_err": abs(lhs - rhs), "rel_err": err}
        row.update(extra)
        self.instances.append(row)

    def extend(self, other: "VerificationReport") -> None:
        self.instances.extend(other.instances)

    @property
    def max_rel_err(self) -> float:
        return max((r["rel_err"] for r in self.instances), default=0.0)

    @property
    def max_abs_err(self) -> float:
        return max((r["abs_err"] for r in self.instances), default=0.0)

    @property
    def passed(self) -> bool:
        return bool(self.max_rel_err <= self.tolerance)

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "tolerance": self.tolerance,
            "relation": self.relation,
            "instances": [dict(r) for r in self.instances],
            "max_rel_err": self.max_rel_err,
            "max_abs_err": self.max_abs_err,
            "pass": self.passed,
        }


def record_failure(report: VerificationReport, seed, exc: Exception) -> VerificationReport:
    # solver failures are reported as a failing instance, never raised
    report.instances.append({"seed": seed, "lhs": float("nan"), "rhs": float("nan"),
                             "abs_err": float("inf"), "rel_err": float("inf"),
                             "error": f"{type(exc).__name__}: {exc}"})
    return report


def verify_compatibility(blocks, f, p, tolerance: float = 1e-6, seed=0,
                         opts: SolverOptions = SolverOptions()) -> VerificationReport:
    """Joint versus nested sum norm, relative gap."""
    report = VerificationReport(f"compatibility_p{check_exponent(p)}", tolerance)
    try:
        joint = sum_rkbs_norm(blocks, f, p, "joint", opts)
        nested = sum_rkbs_norm(blocks, f, p, "nested", opts)
    except RKBSLabError as exc:
        return record_failure(report, seed, exc)
    report.add(seed, joint, nested)
    return report


def partition_blocks(A, partition: SingularPartition):
    A = as_matrix(A)
    if partition.size != A.shape[1]:
        raise AlignmentError(f"partition is over {partition.size} atoms, matrix has {A.shape[1]}")
    return [A[:, b] for b in partition.blocks], list(partition.weights)


def verify_decomposition(A, partition: SingularPartition, f, tolerance: float = 1e-8, seed=0,
                         opts: SolverOptions = SolverOptions()) -> VerificationReport:
    """Integral norm versus the 1-sum of per-block ``L^1(pi_i)`` spaces."""
    if not partition.covers():
        missed = np.flatnonzero(partition.owner() < 0).tolist()
        raise PartitionNotCovering(f"atoms {missed} belong to no block")
    report = VerificationReport("decomposition", tolerance)
    try:
        mats, pis = partition_blocks(A, partition)
        lhs = integral_norm(A, f, opts)
        rhs = sum_rkbs_norm(mats, f, 1, "joint", opts, weights=pis)
    except RKBSLabError as exc:
        return record_failure(report, seed, exc)
    report.add(seed, lhs, rhs)
    return report


def verify_kernel(A, pi, f, tolerance: float = 1e-8, seed=0,
                  opts: SolverOptions = SolverOptions()) -> VerificationReport:
    """Feature-space ``L^2(pi)`` norm versus ``sqrt(f' K^+ f)``."""
    report = VerificationReport("kernel", tolerance)
    try:
        lhs = pnorm_rkbs_norm(A, f, pi, 2, opts)
        rhs = rkhs_norm(gram_from_matrix(A, pi), f, opts)
    except RKBSLabError as exc:
        return record_failure(report, seed, exc)
    report.add(seed, lhs, rhs)
    return report


def verify_sum_kernel(blocks, weights, f, tolerance: float = 1e-6, seed=0,
                      opts: SolverOptions = SolverOptions()) -> VerificationReport:
    """Joint 2-sum norm versus the RKHS norm of the summed Gram matrices."""
    report = VerificationReport("sum_kernel", tolerance)
    try:
        lhs = sum_rkbs_norm(blocks, f, 2, "joint", opts, weights=weights)
        K = sum_kernel(gram_from_matrix(A, pi) for A, pi in zip(blocks, weights))
        rhs = rkhs_norm(K, f, opts)
    except RKBSLabError as exc:
        return record_failure(report, seed, exc)
    report.add(seed, lhs, rhs)
    return report


def verify_inclusion(A, partition: SingularPartition, densities, tolerance: float = 1e-8, seed=0,
                     opts: SolverOptions = SolverOptions()) -> VerificationReport:
    """The chain ``integral <= sum_i pnorm_1(f_i) <= sum_i pnorm_2(f_i)``.

    ``f_i = A_i diag(pi_i) h_i`` and ``f = sum_i f_i``.  Each link and each
    per-block ``pnorm_1 <= pnorm_2`` is recorded as one inequality row, as is
    ``pnorm_1(f) <= pnorm_2(f)`` on the whole grid under uniform weights;
    ``rel_err`` is the violation, so ``passed`` means every slack is at
    least ``-tolerance``.
    """
    report = VerificationReport("inclusion", tolerance, relation="leq")
    mats, pis = partition_blocks(A, partition)
    if len(densities) != len(mats):
        raise AlignmentError(f"{len(densities)} densities for {len(mats)} blocks")
    fs = []
    for M, pi, h in zip(mats, pis, densities):
        hv = _values(h)
        if hv.size != M.shape[1]:
            raise AlignmentError("density does not align with its block")
        fs.append((M * pi.weights[None, :]) @ hv)
    f = np.sum(fs, axis=0)
    try:
        total = integral_norm(A, f, opts)
        p1 = [pnorm_rkbs_norm(M, fi, pi, 1, opts) for M, fi, pi in zip(mats, fs, pis)]
        p2 = [pnorm_rkbs_norm(M, fi, pi, 2, opts) for M, fi, pi in zip(mats, fs, pis)]
        uniform = ProbabilityWeights.uniform(as_matrix(A).shape[1])
        whole = (pnorm_rkbs_norm(A, f, uniform, 1, opts), pnorm_rkbs_norm(A, f, uniform, 2, opts))
    except RKBSLabError as exc:
        return record_failure(report, seed, exc)
    report.add(seed, total, sum(p1), link="integral<=sum_l1", finite=bool(np.isfinite(total)))
    report.add(seed, sum(p1), sum(p2), link="sum_l1<=sum_l2")
    for i, (a, b) in enumerate(zip(p1, p2)):
        report.add(seed, a, b, link=f"block{i}_l1<=l2")
    report.add(seed, whole[0], whole[1], link="pnorm_l1<=l2")
    return report
