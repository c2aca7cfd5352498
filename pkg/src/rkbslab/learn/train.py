"""TV-regularized training of one-hidden-layer networks on a fixed atom grid."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..activation import ActivationFamily, as_matrix, assemble_matrix
from ..errors import AlignmentError, RKBSLabError
from ..losses import as_loss, empirical_risk, risk_gradient
from ..spaces import DiscreteMeasure, ParameterGrid, ParameterPoint
from ..solvers import (SolveReport, SolverOptions, hinge_lasso_lp, prox_grad_lasso,
                       weighted_l1_interpolate)

STRATEGIES = ("full_grid", "exchange")
PRUNE_RATIO = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    lam: float
    opts: SolverOptions = SolverOptions()
    strategy: str = "full_grid"

    def __post_init__(self):
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise RKBSLabError("lambda must be a positive real")
        if self.strategy not in STRATEGIES:
            raise RKBSLabError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")


@dataclass(frozen=True)
class SampleMeasure:
    """Signed weights on the sample points; ``points`` is an ``(n, d)`` array or None."""

    weights: np.ndarray
    points: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)):
            raise RKBSLabError("sample measure weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.points is not None:
            X = np.array(self.points, dtype=float)
            if X.ndim == 1:
                X = X.reshape(-1, 1)
            if X.shape[0] != w.size:
                raise AlignmentError(f"{X.shape[0]} points for {w.size} weights")
            X.setflags(write=False)
            object.__setattr__(self, "points", X)

    @classmethod
    def dirac(cls, k: int, points) -> "SampleMeasure":
        X = np.asarray(points, dtype=float)
        w = np.zeros(X.shape[0])
        w[k] = 1.0
        return cls(w, X)


@dataclass(frozen=True)
class Atom:
    index: int
    weight: float
    point: Optional[ParameterPoint] = None


@dataclass(frozen=True)
class RepresenterSolution:
    """Finitely many atoms whose weighted activations give the fitted values."""

    atoms: tuple
    fitted: np.ndarray
    objective: float
    m: int = 0

    @property
    def size(self) -> int:
        return len(self.atoms)

    def measure(self) -> DiscreteMeasure:
        w = np.zeros(self.m)
        for a in self.atoms:
            w[a.index] = a.weight
        return DiscreteMeasure(w)

    def to_json(self) -> list:
        out = []
        for a in self.atoms:
            row = {"index": a.index, "weight": a.weight}
            if a.point is not None:
                row["theta"] = a.point.theta.tolist()
                row["bias"] = a.point.bias
                if a.point.tag is not None:
                    row["tag"] = a.point.tag
            out.append(row)
        return out


def _labels(labels) -> np.ndarray:
    return np.asarray(getattr(labels, "values", labels), dtype=float).reshape(-1)


def dual_certificate(family: ActivationFamily, grid: ParameterGrid, residual: SampleMeasure) -> np.ndarray:
    """``g(w_j) = sum_k rho_k sigma(x_k, w_j)`` accumulated sample by sample.

    Tabulated families have no pointwise formula, so their table rows are
    used directly.
    """
    rho = residual.weights
    if family.kind == "tabulated":
        table = family.table
        if table.shape != (rho.size, grid.size):
            raise AlignmentError("table does not match the sample measure and grid")
        return np.sum(rho[:, None] * table, axis=0)
    if residual.points is None:
        raise RKBSLabError("the sample measure needs its points to evaluate a certificate")
    g = np.zeros(grid.size)
    for k, x in enumerate(residual.points):
        if rho[k] != 0.0:
            g = g + rho[k] * assemble_matrix(family, x.reshape(1, -1), grid).entries[0]
    return g


def certificate(A, labels, loss, mu) -> np.ndarray:
    """``A^T rho`` for the gradient measure ``rho = -grad R(A mu)`` (includes the 1/n)."""
    A = as_matrix(A)
    w = np.asarray(getattr(mu, "weights", mu), dtype=float)
    loss = as_loss(loss)
    if not loss.smooth:
        raise RKBSLabError("hinge certificates come from the training LP dual")
    return A.T @ (-risk_gradient(loss, A @ w, labels))


def training_objective(A, labels, loss, lam: float, mu) -> float:
    A = as_matrix(A)
    w = np.asarray(getattr(mu, "weights", mu), dtype=float)
    return empirical_risk(loss, A @ w, labels) + lam * float(np.sum(np.abs(w)))


def lambda_max(A, labels, loss="squared") -> float:
    """Smallest ``lambda`` for which the zero measure is optimal (smooth losses)."""
    A = as_matrix(A)
    return float(np.max(np.abs(A.T @ risk_gradient(loss, np.zeros(A.shape[0]), labels))))


def _solve_restricted(A, y, loss, lam, opts, x0=None):
    """Solve on the given columns; returns ``(weights, report, rho)``.

    ``rho`` is a sample measure certifying the solution: ``-grad R`` for
    smooth losses, ``y * nu`` from the LP dual ``nu`` for hinge loss.
    """
    if loss.smooth:
        mu, rep = prox_grad_lasso(A, y, loss, lam, opts, x0)
        return mu.weights, rep, -risk_gradient(loss, A @ mu.weights, y)
    mu, rep = hinge_lasso_lp(A, y, lam, opts)
    return mu.weights, rep, y * rep.dual


def _exchange(A, y, loss, lam, opts):
    n, m = A.shape
    w = np.zeros(m)
    support: list = []
    obj = training_objective(A, y, loss, lam, w)
    history = [obj]
    # at mu = 0 every hinge margin is violated, so rho = y / n there
    rho = -risk_gradient(loss, np.zeros(n), y) if loss.smooth else y / n
    cert = A.T @ rho
    iters = 0
    status = "max_iters"
    for _ in range(m):
        j = int(np.argmax(np.abs(cert)))  # argmax returns the lowest index on ties
        if np.abs(cert[j]) <= lam * (1.0 + opts.opt_tol) or j in support:
            break
        support.append(j)
        cols = np.array(sorted(support))
        sub, rep, sub_rho = _solve_restricted(A[:, cols], y, loss, lam, opts, w[cols])
        iters += rep.iterations
        trial = np.zeros(m)
        trial[cols] = sub
        new_obj = training_objective(A, y, loss, lam, trial)
        if new_obj > obj:
            break  # keep the objective sequence nonincreasing
        w, obj, rho = trial, new_obj, sub_rho
        history.append(obj)
        cert = A.T @ rho
    if np.max(np.abs(cert)) <= lam * (1.0 + opts.opt_tol):
        status = "optimal"
    return w, cert, iters, status, tuple(history)


def train_tv(A, labels, loss, config: TrainConfig, grid: Optional[ParameterGrid] = None):
    """Minimize ``R(A mu) + lam ||mu||_TV`` and extract a sparse representer.

    Returns ``(mu, RepresenterSolution, SolveReport)``; the report's ``dual``
    is the final certificate ``A^T rho`` over the whole grid.
    """
    A = as_matrix(A)
    y = _labels(labels)
    loss = as_loss(loss)
    if A.shape[0] != y.size:
        raise AlignmentError(f"matrix has {A.shape[0]} rows, labels have {y.size} entries")
    lam, opts = config.lam, config.opts
    if config.strategy == "full_grid":
        w, rep, rho = _solve_restricted(A, y, loss, lam, opts)
        cert = A.T @ rho
        iters, status, history = rep.iterations, rep.status, (training_objective(A, y, loss, lam, w),)
    else:
        w, cert, iters, status, history = _exchange(A, y, loss, lam, opts)
    mu = DiscreteMeasure(w)
    rep_sol = extract_representer(mu, A, grid, y, loss, lam, opts)
    report = SolveReport(training_objective(A, y, loss, lam, w), iters, 0.0, status, cert, history)
    return mu, rep_sol, report


def kkt_surplus(cert, lam: float) -> float:
    return float(np.max(np.abs(cert), initial=0.0)) - lam


def extract_representer(mu, A, grid: Optional[ParameterGrid], labels, loss, lam: float,
                        opts: SolverOptions = SolverOptions()) -> RepresenterSolution:
    """Prune ``|a_j| <= 1e-8 max|a|`` and, if more than ``n`` atoms survive,
    replace them by a basic solution of ``min ||nu||_1`` s.t. ``A_S nu = A_S a_S``.
    """
    A = as_matrix(A)
    w = np.asarray(getattr(mu, "weights", mu), dtype=float).copy()
    n, m = A.shape
    if grid is not None and grid.size != m:
        raise AlignmentError("grid size does not match the matrix")
    top = float(np.max(np.abs(w), initial=0.0))
    w[np.abs(w) <= PRUNE_RATIO * top] = 0.0
    cols = np.flatnonzero(w)
    if cols.size > n:
        target = A[:, cols] @ w[cols]
        sub, rep = weighted_l1_interpolate(A[:, cols], target, np.ones(cols.size), opts)
        if rep.optimal and np.sum(np.abs(sub)) <= np.sum(np.abs(w[cols])):
            w = np.zeros(m)
            w[cols] = sub
            cols = np.flatnonzero(w)
    fitted = A[:, cols] @ w[cols]
    atoms = tuple(Atom(int(j), float(w[j]), grid.atom(int(j)) if grid is not None else None) for j in cols)
    objective = empirical_risk(loss, fitted, labels) + lam * float(np.sum(np.abs(w)))
    return RepresenterSolution(atoms, fitted, objective, m)
