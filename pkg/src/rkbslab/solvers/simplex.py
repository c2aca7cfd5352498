"""Dense two-phase revised simplex with Bland's anti-cycling rule.

Problems are small (tens of rows, a few hundred columns), so every iteration
refactors the basis from scratch instead of updating an inverse; this keeps
the returned vertex accurate to working precision.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NotRepresentable, RKBSLabError
from .options import SolverOptions

PIVOT_TOL = 1e-9
HARRIS_TOL = 1e-10
STABLE_PIVOT = 1e-6


@dataclass
class LPResult:
    x: np.ndarray
    dual: np.ndarray
    basis: np.ndarray
    iterations: int
    status: str
    residual: float


def _row_reduce(M: np.ndarray, b: np.ndarray, opts: SolverOptions):
    """Replace ``M x = b`` by an equivalent full-row-rank system.

    With ``M D^-1 = U S V^T`` for the column norms ``D``, the reduced rows are
    ``V_r^T D`` and the right side ``S_r^-1 U_r^T b``; the reduced matrix has
    orthonormal rows up to column scaling. Returns ``(Mr, br, W, residual)``
    where ``W = U_r S_r^-1`` maps reduced duals back to the original rows.
    """
    # rank is decided on the column-normalized matrix: representability does not
    # change under positive column scaling, and neither should the decision
    norms = np.linalg.norm(M, axis=0)
    live = norms > 0
    U, s, Vt = np.linalg.svd(M[:, live] / norms[live], full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, M.shape[1])), np.zeros(0), np.zeros((M.shape[0], 0)), float(np.linalg.norm(b))
    r = int(np.sum(s > opts.svd_cutoff_ratio * s[0]))
    Ur, sr = U[:, :r], s[:r]
    proj = Ur.T @ b
    residual = float(np.linalg.norm(b - Ur @ proj))
    Mr = np.zeros((r, M.shape[1]))
    Mr[:, live] = Vt[:r] * norms[live]
    return Mr, proj / sr, Ur / sr, residual


def _harris(xB, direction, pos, basis):
    """Two-pass ratio test: allow a primal slack of HARRIS_TOL to find the step
    bound, then take the largest pivot among rows within it. Returns the
    leaving row and its pivot.
    """
    x_pos = np.maximum(xB[pos], 0.0)
    slack = HARRIS_TOL * max(1.0, float(np.max(np.abs(xB))))
    bound = float(np.min((x_pos + slack) / direction[pos]))
    within = x_pos / direction[pos] <= bound
    piv = direction[pos][within]
    rows = pos[within]
    big = rows[piv >= piv.max() * (1.0 - 1e-12)]
    leave = int(big[np.argmin(basis[big])])  # lowest basic index among equal pivots
    return leave, float(piv.max())


def _simplex_phase(M, b, c, basis, allowed, max_iters, free):
    """Run primal simplex from a feasible basis. Returns (basis, iterations, status).

    ``free`` columns have no sign constraint: they never block a step and may
    enter in either direction.
    """
    r, N = M.shape
    scale = max(1.0, float(np.max(np.abs(c))) if c.size else 1.0)
    it = 0
    in_basis = np.zeros(N, dtype=bool)
    in_basis[basis] = True
    while True:
        if it >= max_iters:
            return basis, it, "max_iters"
        B = M[:, basis]
        xB = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, c[basis])
        d = c - M.T @ y
        tol = PIVOT_TOL * scale
        eligible = allowed & ~in_basis & ((d < -tol) | (free & (d > tol)))
        candidates = np.flatnonzero(eligible)
        if candidates.size == 0:
            return basis, it, "optimal"
        bounded = ~free[basis]
        # Bland order over the eligible columns; a candidate with no blocking row
        # can only be reduced-cost noise on a zero-cost ray, so it is skipped, and
        # one whose best pivot is tiny is deferred in favour of a stable one
        choice = None
        deferred = None
        for j in candidates:
            direction = np.linalg.solve(B, M[:, j])
            if d[j] > 0:
                direction = -direction  # free column entering downwards
            dmax = float(np.max(np.abs(direction)))
            pos = np.flatnonzero(bounded & (direction > PIVOT_TOL * max(1.0, dmax)))
            if not pos.size:
                continue
            leave, piv = _harris(xB, direction, pos, basis)
            quality = piv / max(1.0, dmax)
            if quality >= STABLE_PIVOT:
                choice = (int(j), leave)
                break
            if deferred is None or quality > deferred[0]:
                deferred = (quality, int(j), leave)
        if choice is None:
            if deferred is None:
                return basis, it, "unbounded"
            choice = deferred[1:]
        j, leave = choice
        in_basis[basis[leave]] = False
        basis[leave] = j
        in_basis[j] = True
        it += 1


def solve_standard(M, b, c, opts: SolverOptions = SolverOptions(), free=None) -> LPResult:
    """Minimize ``c @ x`` subject to ``M x = b`` and ``x >= 0`` off the ``free`` mask.

    ``status`` is ``optimal``, ``infeasible`` or ``max_iters``; an unbounded
    program raises since none of the library's programs can be unbounded.
    """
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    n_rows, N = M.shape
    free = np.zeros(N, dtype=bool) if free is None else np.asarray(free, dtype=bool).reshape(-1)
    Mr, br, Ur, residual = _row_reduce(M, b, opts)
    tol = opts.feas_tol * (1.0 + float(np.linalg.norm(b)))
    if residual > tol:
        return LPResult(np.zeros(N), np.zeros(n_rows), np.zeros(0, dtype=int), 0, "infeasible", residual)
    r = Mr.shape[0]
    if r == 0:
        return LPResult(np.zeros(N), np.zeros(n_rows), np.zeros(0, dtype=int), 0, "optimal", residual)

    sign = np.where(br < 0, -1.0, 1.0)
    Mr = Mr * sign[:, None]
    br = br * sign

    # phase 1: artificial identity block appended after the structural columns
    M1 = np.hstack([Mr, np.eye(r)])
    c1 = np.concatenate([np.zeros(N), np.ones(r)])
    free1 = np.concatenate([free, np.zeros(r, dtype=bool)])
    basis = np.arange(N, N + r)
    allowed = np.ones(N + r, dtype=bool)
    basis, it1, status = _simplex_phase(M1, br, c1, basis, allowed, opts.max_iters, free1)
    if status == "max_iters":
        return LPResult(np.zeros(N), np.zeros(n_rows), basis, it1, status, residual)
    xB = np.linalg.solve(M1[:, basis], br)
    art_level = float(np.sum(np.maximum(xB[basis >= N], 0.0)))
    if art_level > tol:
        return LPResult(np.zeros(N), np.zeros(n_rows), basis, it1, "infeasible", art_level)

    # drive zero-level artificials out of the basis, largest available pivot first
    keep_rows = np.ones(r, dtype=bool)
    for pos in range(r):
        if basis[pos] < N:
            continue
        Binv_row = np.linalg.solve(M1[:, basis].T, np.eye(r)[pos])
        row = Binv_row @ Mr
        row[basis[basis < N]] = 0.0
        big = float(np.max(np.abs(row)))
        if big > 1e-9:
            basis[pos] = int(np.argmax(np.abs(row)))
        else:
            keep_rows[pos] = False
    if not np.all(keep_rows):
        # numerically redundant rows: drop them with their artificial basics
        basis = basis[keep_rows]
        Mr, br = Mr[keep_rows], br[keep_rows]
        sign = sign[keep_rows]
        Ur = Ur[:, keep_rows]
        r = Mr.shape[0]

    allowed = np.ones(N, dtype=bool)
    basis, it2, status = _simplex_phase(Mr, br, c, basis, allowed, opts.max_iters - it1, free)
    if status == "unbounded":
        raise RKBSLabError("linear program is unbounded")
    x = np.zeros(N)
    B = Mr[:, basis]
    x[basis] = np.linalg.solve(B, br)
    x = np.where(free, x, np.maximum(x, 0.0))
    y = np.linalg.solve(B.T, c[basis]) * sign
    dual = Ur @ y
    res = float(np.linalg.norm(M @ x - b))
    return LPResult(x, dual, basis, it1 + it2, status, res)


def solve_lp(M, b, c, free=None, opts: SolverOptions = SolverOptions()) -> LPResult:
    """``solve_standard`` with an optional mask of free (sign-unrestricted) variables."""
    return solve_standard(M, b, c, opts, free)


def weighted_l1_min(M, f, cost, opts: SolverOptions = SolverOptions()):
    """Basic optimal solution of ``min sum_j cost_j |x_j|`` s.t. ``M x = f``.

    Returns ``(x, dual, LPResult)``; ``dual`` satisfies ``|M^T dual| <= cost``
    at optimality.
    """
    M = np.asarray(M, dtype=float)
    f = np.asarray(f, dtype=float).reshape(-1)
    cost = np.asarray(cost, dtype=float).reshape(-1)
    m = M.shape[1]
    res = solve_standard(np.hstack([M, -M]), f, np.concatenate([cost, cost]), opts)
    if res.status == "infeasible":
        raise NotRepresentable("target is not in the range of the synthesis matrix", res.residual)
    x = res.x[:m] - res.x[m:]
    return x, res.dual, res
