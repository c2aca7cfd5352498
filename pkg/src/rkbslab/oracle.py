"""Brute-force reference computations for tiny instances.

Nothing here calls into :mod:`rkbslab.solvers`; the point is to have a
second, obviously-correct route to the same numbers.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, NotRepresentable, RKBSLabError


@dataclass(frozen=True)
class OracleBudget:
    max_cols: int = 12
    max_rows: int = 3
    iter_budget: int = 2_000_000

    def __post_init__(self):
        if min(self.max_cols, self.max_rows, self.iter_budget) < 1:
            raise RKBSLabError("oracle budgets must be positive")


def oracle_min_l1(A, f, budget: OracleBudget = OracleBudget()) -> float:
    """Least l1 cost over all basic solutions of ``A mu = f``.

    Every vertex of the feasible polyhedron of the positive/negative split is
    supported on a linearly independent column subset of size at most
    ``rank(A) <= n``, so scanning those subsets is exact.
    """
    A = np.asarray(A, dtype=float)
    f = np.asarray(f, dtype=float).reshape(-1)
    n, m = A.shape
    if n > budget.max_rows or m > budget.max_cols:
        raise BudgetExceeded(f"instance {n}x{m} exceeds oracle limits {budget.max_rows}x{budget.max_cols}")
    n_subsets = sum(math.comb(m, k) for k in range(min(n, m) + 1))
    if n_subsets > budget.iter_budget:
        raise BudgetExceeded(f"{n_subsets} subsets exceed the iteration budget")
    tol = 1e-9 * (1.0 + np.linalg.norm(f))
    best = math.inf
    for k in range(min(n, m) + 1):
        for cols in itertools.combinations(range(m), k):
            if k == 0:
                if np.linalg.norm(f) <= tol:
                    best = 0.0
                continue
            sub = A[:, cols]
            if np.linalg.matrix_rank(sub) < k:
                continue
            coef, *_ = np.linalg.lstsq(sub, f, rcond=None)
            if np.linalg.norm(sub @ coef - f) <= tol:
                best = min(best, float(np.sum(np.abs(coef))))
    if math.isinf(best):
        raise NotRepresentable("no basic solution reproduces the target")
    return best


SUBGRADIENT_ITERS = 20000


def _losses(kind):
    # value and one subgradient of the mean loss in the prediction argument
    if kind == "squared":
        return (lambda y, t: (t - y) ** 2), (lambda y, t: 2.0 * (t - y))
    if kind == "logistic":
        return (lambda y, t: np.logaddexp(0.0, -y * t)), (lambda y, t: -y / (1.0 + np.exp(y * t)))
    if kind == "hinge":
        return (lambda y, t: np.maximum(0.0, 1.0 - y * t)), (lambda y, t: np.where(y * t < 1.0, -y, 0.0))
    raise RKBSLabError(f"oracle has no loss {kind!r}")


def oracle_subgradient(A, labels, loss_kind: str, lam: float, budget: OracleBudget = OracleBudget(),
                       step0: float | None = None, iters: int = SUBGRADIENT_ITERS) -> float:
    """Best objective seen by subgradient descent with steps ``step0 / sqrt(k+1)``.

    Runs ``min(iters, budget.iter_budget)`` steps; the result is an upper bound
    on the optimum that tightens slowly (order ``1/sqrt(iters)``).
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(labels, dtype=float).reshape(-1)
    n, m = A.shape
    value, grad = _losses(getattr(loss_kind, "kind", loss_kind))

    def objective(mu):
        return float(np.mean(value(y, A @ mu)) + lam * np.sum(np.abs(mu)))

    if step0 is None:
        step0 = 1.0 / max(1e-12, float(np.linalg.norm(A, 2)) ** 2 / n + lam)
    mu = np.zeros(m)
    best = objective(mu)
    for k in range(min(iters, budget.iter_budget)):
        g = A.T @ grad(y, A @ mu) / n + lam * np.sign(mu)
        gn = np.linalg.norm(g)
        if gn == 0:
            break
        mu = mu - (step0 / math.sqrt(k + 1.0)) * g
        best = min(best, objective(mu))
    return best


def oracle_eigensolve(K, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, nonincreasing."""
    a = np.array(K, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise RKBSLabError("eigensolver needs a square matrix")
    if n > 16:
        raise BudgetExceeded("oracle eigensolver is limited to n <= 16")
    a = 0.5 * (a + a.T)
    scale = max(1.0, float(np.max(np.abs(a)))) if n else 1.0
    for _ in range(max_sweeps):
        # summed directly; the difference of squares can round below zero
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)) * 2.0)
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-30 * scale:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k, p], a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p, k], a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
    return np.sort(np.diag(a))[::-1]
