"""Accelerated proximal gradient for l1- and group-l2-regularized empirical risk."""
from __future__ import annotations

import numpy as np

from ..activation import as_matrix
from ..errors import AlignmentError, RKBSLabError, UnsupportedLoss
from ..losses import as_loss
from ..spaces import DiscreteMeasure
from .options import SolveReport, SolverOptions

CHECK_EVERY = 10
ZERO_SLACK = 1e-12
NEWTON_STEPS = 50


def _labels(labels) -> np.ndarray:
    return np.asarray(getattr(labels, "values", labels), dtype=float).reshape(-1)


def soft_threshold(v, tau):
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def group_shrink(v, tau):
    v = np.asarray(v, dtype=float)
    nv = float(np.linalg.norm(v))
    if nv <= tau:
        return np.zeros_like(v)
    return (1.0 - tau / nv) * v


class _Problem:
    """Smooth part ``R(M x)`` with cached quantities."""

    def __init__(self, M, y, loss):
        self.M, self.y, self.loss = M, y, loss
        self.n = y.size

    def risk(self, x):
        return float(np.mean(self.loss.values(self.y, self.M @ x)))

    def grad(self, x):
        # gradient of the mean risk with respect to x: M^T dR/dt
        return self.M.T @ (self.loss.derivative(self.y, self.M @ x) / self.n)

    def hessian(self, x, cols):
        Ms = self.M[:, cols]
        d2 = self.loss.second_derivative(self.y, self.M @ x) / self.n
        return Ms.T @ (d2[:, None] * Ms)

    def lipschitz(self):
        s = np.linalg.norm(self.M, 2)
        return max(self.loss.curvature_bound(self.y) * s * s / self.n, 1e-300)


def lasso_kkt(A, labels, loss, lam, mu):
    """Optimality measures of ``mu`` for ``R(A mu) + lam ||mu||_1``.

    Returns ``(surplus, fixed_point_residual, certificate)`` where the
    certificate is ``-A^T grad R`` and the residual is the sup-norm of the
    gradient mapping at step ``1/L``.
    """
    loss = as_loss(loss)
    prob = _Problem(as_matrix(A), _labels(labels), loss)
    x = np.asarray(getattr(mu, "weights", mu), dtype=float)
    g = prob.grad(x)
    t = 1.0 / prob.lipschitz()
    fp = float(np.max(np.abs(x - soft_threshold(x - t * g, t * lam)), initial=0.0)) / t
    return float(np.max(np.abs(g), initial=0.0)) - lam, fp, -g


def _fista(prob, x0, prox, penalty, L, opts, converged):
    """FISTA with gradient-based adaptive restart; returns ``(x, iters, done)``.

    The returned iterate is the best one seen by the checked objective, so a
    cap on iterations still yields a monotone answer.
    """
    t = 1.0 / L
    x = x0.copy()
    z = x0.copy()
    theta = 1.0
    best_x, best_obj = x.copy(), prob.risk(x) + penalty(x)
    for it in range(1, opts.max_iters + 1):
        g = prob.grad(z)
        x_new = prox(z - t * g, t)
        # restart when the momentum direction disagrees with the step taken
        if np.dot(z - x_new, x_new - x) > 0:
            theta = 1.0
            z = x.copy()
            g = prob.grad(z)
            x_new = prox(z - t * g, t)
        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        z = x_new + ((theta - 1.0) / theta_new) * (x_new - x)
        x, theta = x_new, theta_new
        if it % CHECK_EVERY == 0 or it == opts.max_iters:
            obj = prob.risk(x) + penalty(x)
            if obj <= best_obj:
                best_x, best_obj = x.copy(), obj
            if converged(x):
                return x, it, True
    return best_x, opts.max_iters, False


def _newton_polish(prob, x, lam, opts):
    """Newton on the sign-fixed support; ``None`` if the support is not stable."""
    cols = np.flatnonzero(x)
    if cols.size == 0:
        return None
    s = np.sign(x[cols])
    xs = x.copy()
    for _ in range(NEWTON_STEPS):
        gs = prob.grad(xs)[cols] + lam * s
        H = prob.hessian(xs, cols)
        try:
            step = np.linalg.solve(H, gs)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        xs[cols] -= step
        if np.max(np.abs(step)) <= 1e-15 * max(1.0, np.max(np.abs(xs[cols]))):
            break
    if np.any(np.sign(xs[cols]) != s):
        return None
    return xs


def prox_grad_lasso(A, labels, loss, lam: float, opts: SolverOptions = SolverOptions(), x0=None):
    """Minimize ``R(A mu) + lam * sum |mu_j|`` for a smooth convex loss.

    Runs FISTA with soft-thresholding until the KKT surplus and the
    fixed-point residual are both at most ``opt_tol * lam``, then tries a
    Newton refinement on the detected support and keeps it only if it is
    at least as good by every check.
    """
    A = as_matrix(A)
    y = _labels(labels)
    loss = as_loss(loss)
    if not loss.smooth:
        raise UnsupportedLoss("prox_grad_lasso needs a differentiable loss; hinge training uses the LP route")
    if not lam > 0:
        raise RKBSLabError("lambda must be positive")
    if A.shape[0] != y.size:
        raise AlignmentError(f"matrix has {A.shape[0]} rows, labels have {y.size} entries")
    prob = _Problem(A, y, loss)
    m = A.shape[1]
    tol = opts.opt_tol * lam

    def objective(x):
        return prob.risk(x) + lam * float(np.sum(np.abs(x)))

    def measures(x):
        g = prob.grad(x)
        fp = np.max(np.abs(x - soft_threshold(x - g / L, lam / L)), initial=0.0) * L
        return float(np.max(np.abs(g), initial=0.0)) - lam, float(fp), g

    L = prob.lipschitz()
    zero = np.zeros(m)
    surplus0, _, g0 = measures(zero)
    if surplus0 <= ZERO_SLACK * lam:
        return DiscreteMeasure(zero), SolveReport(objective(zero), 0, 0.0, "optimal", -g0)

    def converged(x):
        surplus, fp, _ = measures(x)
        return surplus <= tol and fp <= tol

    start = zero if x0 is None else np.asarray(getattr(x0, "weights", x0), dtype=float).copy()
    x, iters, done = _fista(prob, start, lambda v, t: soft_threshold(v, t * lam),
                            lambda v: lam * float(np.sum(np.abs(v))), L, opts, converged)
    polished = _newton_polish(prob, x, lam, opts)
    if polished is not None and objective(polished) <= objective(x) + 1e-15 * max(1.0, abs(objective(x))):
        sp, fpp, _ = measures(polished)
        sx, fpx, _ = measures(x)
        if max(sp, fpp) <= max(sx, fpx, tol):
            x, done = polished, done or (sp <= tol and fpp <= tol)
    surplus, fp, g = measures(x)
    status = "optimal" if (surplus <= tol and fp <= tol) else "max_iters"
    return DiscreteMeasure(x), SolveReport(objective(x), iters, 0.0, status, -g)


def prox_grad_group(M, labels, loss, lam: float, opts: SolverOptions = SolverOptions()):
    """Minimize ``R(M g) + lam * ||g||_2`` (one unsquared Euclidean penalty).

    Returns ``(g, SolveReport)``.  Optimality: ``||M^T grad R|| <= lam`` at
    ``g = 0``, otherwise ``M^T grad R + lam g / ||g|| = 0``.
    """
    M = np.asarray(M, dtype=float)
    y = _labels(labels)
    loss = as_loss(loss)
    if not loss.smooth:
        raise UnsupportedLoss("group prox-gradient needs a differentiable loss")
    prob = _Problem(M, y, loss)
    L = prob.lipschitz()
    tol = opts.opt_tol * lam

    def objective(x):
        return prob.risk(x) + lam * float(np.linalg.norm(x))

    def residual(x):
        g = prob.grad(x)
        return float(np.linalg.norm(x - group_shrink(x - g / L, lam / L))) * L, g

    zero = np.zeros(M.shape[1])
    g0 = prob.grad(zero)
    if np.linalg.norm(g0) <= lam * (1.0 + ZERO_SLACK):
        return zero, SolveReport(objective(zero), 0, 0.0, "optimal", -g0)
    x, iters, _ = _fista(prob, zero, lambda v, t: group_shrink(v, t * lam),
                         lambda v: lam * float(np.linalg.norm(v)), L, opts,
                         lambda v: residual(v)[0] <= tol)
    # Newton refinement of the stationarity equation away from the origin
    xs = x.copy()
    cols = np.arange(M.shape[1])
    for _ in range(NEWTON_STEPS):
        nx = np.linalg.norm(xs)
        if nx == 0:
            break
        u = xs / nx
        grad = prob.grad(xs) + lam * u
        H = prob.hessian(xs, cols) + (lam / nx) * (np.eye(xs.size) - np.outer(u, u))
        try:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        except np.linalg.LinAlgError:
            break
        xs = xs - step
        if np.max(np.abs(step)) <= 1e-15 * max(1.0, np.max(np.abs(xs))):
            break
    if np.all(np.isfinite(xs)) and objective(xs) <= objective(x) and residual(xs)[0] <= residual(x)[0]:
        x = xs
    res, g = residual(x)
    status = "optimal" if res <= tol else "max_iters"
    return x, SolveReport(objective(x), iters, 0.0, status, -g)


def hinge_lasso_lp(A, labels, lam: float, opts: SolverOptions = SolverOptions()):
    """Exact hinge-loss training ``mean(max(0, 1 - y_k (A mu)_k)) + lam ||mu||_1`` as an LP.

    Variables ``mu`` (free), slacks ``xi >= 0`` and surpluses ``s >= 0`` with
    ``y_k (A mu)_k + xi_k - s_k = 1``.
    """
    from .simplex import solve_lp

    A = as_matrix(A)
    y = _labels(labels)
    if not lam > 0:
        raise RKBSLabError("lambda must be positive")
    if A.shape[0] != y.size:
        raise AlignmentError(f"matrix has {A.shape[0]} rows, labels have {y.size} entries")
    n, m = A.shape
    M = np.hstack([y[:, None] * A, np.eye(n), -np.eye(n)])
    c = np.concatenate([np.zeros(m), np.full(n, 1.0 / n), np.zeros(n)])
    # free mu is split inside solve_lp with cost lam on both parts
    Ms = np.hstack([M[:, :m], -M[:, :m], M[:, m:]])
    cs = np.concatenate([np.full(m, lam), np.full(m, lam), c[m:]])
    res = solve_lp(Ms, np.ones(n), cs, None, opts)
    x = res.x
    mu = x[:m] - x[m : 2 * m]
    obj = float(np.mean(np.maximum(0.0, 1.0 - y * (A @ mu)))) + lam * float(np.sum(np.abs(mu)))
    status = res.status if res.status != "infeasible" else "max_iters"
    return DiscreteMeasure(mu), SolveReport(obj, res.iterations, 0.0, status, res.dual)
