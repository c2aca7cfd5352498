"""Feature-space versus hypothesis-space training problems.

The feature side is ordinary training over measures (or block densities).
The hypothesis side minimizes ``R(f) + lam N(f)`` over sample-value vectors
``f`` and is computed through the dual unit ball of ``N``:

* ``N`` = integral norm: the ball ``{nu : |A^T nu|_inf <= 1}``, a polytope,
  handled by an active-set projection;
* ``N`` = 2-sum of ``L^2`` block norms: the ellipsoid ``{nu : nu' K nu <= 1}``
  with ``K`` the summed Gram matrix.

For squared loss the hypothesis optimum is a projection in closed form; for
logistic loss it is an accelerated proximal iteration in ``f`` whose prox is
obtained from the projection by the Moreau identity; hinge loss with ``p=1``
is an LP in the function values.
"""
from __future__ import annotations

import numpy as np

from ..activation import as_matrix
from ..errors import AlignmentError, RKBSLabError, UnsupportedLoss
from ..losses import as_loss, empirical_risk, risk_gradient
from ..rkbs import (VerificationReport, gram_from_matrix, integral_norm, record_failure, rkhs_norm,
                    sum_kernel, sum_rkbs_norm)
from ..spaces import ProbabilityWeights, check_exponent
from ..solvers import SolverOptions, prox_grad_group, solve_lp
from .train import TrainConfig, train_tv

QP_MAX_ITERS = 10_000
FISTA_MAX_ITERS = 50_000


def _labels(labels) -> np.ndarray:
    return np.asarray(getattr(labels, "values", labels), dtype=float).reshape(-1)


def project_polytope(G, z, max_iters: int = QP_MAX_ITERS) -> np.ndarray:
    """Euclidean projection of ``z`` onto ``{nu : |G nu|_inf <= 1}``.

    Primal active-set method started from the feasible point ``nu = 0``;
    the working set holds signed rows of ``G`` that are tight.
    """
    G = np.asarray(G, dtype=float)
    z = np.asarray(z, dtype=float)
    rows = np.vstack([G, -G])
    live = np.flatnonzero(np.any(rows != 0, axis=1))
    nu = np.zeros_like(z)
    work: list = []
    scale = max(1.0, float(np.linalg.norm(z)))
    for _ in range(max_iters):
        r = nu - z
        if work:
            Q, _ = np.linalg.qr(rows[work].T)
            p = -(r - Q @ (Q.T @ r))
        else:
            p = -r
        if np.linalg.norm(p) <= 1e-14 * scale:
            if not work:
                return nu
            mult = np.linalg.lstsq(rows[work].T, -r, rcond=None)[0]
            k = int(np.argmin(mult))
            if mult[k] >= -1e-12 * scale:
                return nu
            work.pop(k)
            continue
        alpha, block = 1.0, None
        slope = rows[live] @ p
        for i, s in zip(live, slope):
            if i in work or s <= 0:
                continue
            a = (1.0 - rows[i] @ nu) / s
            if a < alpha:
                alpha, block = max(a, 0.0), int(i)
        nu = nu + alpha * p
        if block is not None:
            work.append(block)
    raise RKBSLabError("polytope projection did not converge")


def project_ellipsoid(K, z, iters: int = 200) -> np.ndarray:
    """Euclidean projection of ``z`` onto ``{nu : nu' K nu <= 1}`` for PSD ``K``.

    In the eigenbasis the projection is ``c_i / (1 + tau k_i)``; ``tau`` is
    found by bisection on the decreasing constraint value.
    """
    K = np.asarray(K, dtype=float)
    z = np.asarray(z, dtype=float)
    k, V = np.linalg.eigh(K)
    k = np.maximum(k, 0.0)
    c = V.T @ z
    if np.sum(k * c * c) <= 1.0:
        return z.copy()

    def excess(tau):
        return float(np.sum(k * c * c / (1.0 + tau * k) ** 2)) - 1.0

    lo, hi = 0.0, 1.0
    while excess(hi) > 0:
        hi *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * hi:
            break
    return V @ (c / (1.0 + hi * k))


def _hypothesis_smooth(y, loss, lam, project, gauge, opts):
    """Minimize ``R(f) + lam N(f)`` for a smooth loss, given a dual-ball projection."""
    n = y.size
    if loss.kind == "squared":
        nu = project(2.0 * y / (n * lam))
        opt = lam * float(nu @ y) - 0.25 * n * lam * lam * float(nu @ nu)
        return y - 0.5 * n * lam * nu, opt
    L = loss.curvature_bound(y) / n
    t = 1.0 / L

    def prox(v):
        return v - t * lam * project(v / (t * lam))

    def obj(f):
        return empirical_risk(loss, f, y) + lam * gauge(f)

    f = np.zeros(n)
    z = f.copy()
    theta = 1.0
    tol = opts.opt_tol * lam
    for _ in range(FISTA_MAX_ITERS):
        f_new = prox(z - t * risk_gradient(loss, z, y))
        if np.dot(z - f_new, f_new - f) > 0:
            theta, z = 1.0, f.copy()
            f_new = prox(z - t * risk_gradient(loss, z, y))
        step = np.linalg.norm(f_new - z) / t
        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        z = f_new + ((theta - 1.0) / theta_new) * (f_new - f)
        f, theta = f_new, theta_new
        if step <= tol * 1e-2:
            break
    return f, obj(f)


def _gauge_polytope(A, f, opts):
    # N(f) = max nu' f over |A^T nu|_inf <= 1, an LP in (nu free, slacks)
    n, m = A.shape
    M = np.vstack([np.hstack([A.T, np.eye(m), np.zeros((m, m))]),
                   np.hstack([-A.T, np.zeros((m, m)), np.eye(m)])])
    c = np.concatenate([-f, np.zeros(2 * m)])
    free = np.concatenate([np.ones(n, bool), np.zeros(2 * m, bool)])
    res = solve_lp(M, np.ones(2 * m), c, free, opts)
    return -float(c @ res.x)


def _hinge_hypothesis_lp(A, y, lam, opts):
    # variables: f (free), mu+ , mu-, xi, s; rows A mu - f = 0 and y f + xi - s = 1
    n, m = A.shape
    I, Z = np.eye(n), np.zeros((n, n))
    M = np.vstack([np.hstack([-I, A, -A, Z, Z]),
                   np.hstack([np.diag(y), np.zeros((n, 2 * m)), I, -I])])
    b = np.concatenate([np.zeros(n), np.ones(n)])
    c = np.concatenate([np.zeros(n), np.full(2 * m, lam), np.full(n, 1.0 / n), np.zeros(n)])
    free = np.concatenate([np.ones(n, bool), np.zeros(2 * m + 2 * n, bool)])
    res = solve_lp(M, b, c, free, opts)
    return res.x[:n], float(c @ res.x)


def hypothesis_optimum(A, labels, loss, lam: float, opts: SolverOptions = SolverOptions()):
    """``min_f R(f) + lam * integral_norm(A, f)``; returns ``(f, value)``."""
    A = as_matrix(A)
    y = _labels(labels)
    loss = as_loss(loss)
    if not loss.smooth:
        return _hinge_hypothesis_lp(A, y, lam, opts)
    return _hypothesis_smooth(y, loss, lam, lambda v: project_polytope(A.T, v),
                              lambda f: _gauge_polytope(A, f, opts), opts)


def block_hypothesis_optimum(blocks, labels, loss, lam: float, p, weights=None,
                             opts: SolverOptions = SolverOptions()):
    """``min_f R(f) + lam * ||f||`` in the ``p``-sum of the block spaces."""
    p = check_exponent(p)
    mats = [as_matrix(A) for A in blocks]
    y = _labels(labels)
    loss = as_loss(loss)
    if p == 1:
        return hypothesis_optimum(np.hstack(mats), y, loss, lam, opts)
    if not loss.smooth:
        raise UnsupportedLoss("hinge loss with 2-sum block norms has no LP form")
    pis = _block_weights(mats, weights)
    K = sum_kernel(gram_from_matrix(A, pi) for A, pi in zip(mats, pis)).K
    return _hypothesis_smooth(y, loss, lam, lambda v: project_ellipsoid(K, v),
                              lambda f: rkhs_norm(K, f, opts), opts)


def _block_weights(mats, weights):
    if weights is None:
        return [ProbabilityWeights.uniform(A.shape[1]) for A in mats]
    if len(weights) != len(mats):
        raise AlignmentError(f"{len(weights)} weight vectors for {len(mats)} blocks")
    return [w if isinstance(w, ProbabilityWeights) else ProbabilityWeights(w) for w in weights]


def verify_reformulation(A, labels, loss, lam: float, tolerance: float = 1e-6, seed=0,
                         opts: SolverOptions = SolverOptions()) -> VerificationReport:
    """Feature and hypothesis optima agree, and ``A mu*`` attains the latter.

    Row ``optimum`` compares the two optimal values; row ``transfer``
    compares ``R(A mu*) + lam * integral_norm(A, A mu*)`` with the hypothesis
    optimum.  Gaps are scaled by ``max(1, |value|)``.
    """
    A = as_matrix(A)
    y = _labels(labels)
    report = VerificationReport("reformulation", tolerance, floor=1.0)
    try:
        mu, _, rep = train_tv(A, y, loss, TrainConfig(lam, opts))
        _, opt_ii = hypothesis_optimum(A, y, loss, lam, opts)
        f_star = A @ mu.weights
        transfer = empirical_risk(loss, f_star, y) + lam * integral_norm(A, f_star, opts)
    except RKBSLabError as exc:
        return record_failure(report, seed, exc)
    report.add(seed, rep.objective, opt_ii, check="optimum")
    report.add(seed, transfer, opt_ii, check="transfer")
    return report


def block_feature_optimum(blocks, labels, loss, lam: float, p, weights=None,
                          opts: SolverOptions = SolverOptions()):
    """Training over the ``p``-sum of block feature spaces; returns ``(f*, value)``.

    For ``p=1`` the block norms are total variations (equivalently weighted
    ``L^1`` norms, which the substitution ``g = pi h`` turns into the same
    problem).  For ``p=2`` the substitution ``g = sqrt(pi) h`` gives
    ``min R(M g) + lam ||g||_2`` with ``M = [A_i diag(sqrt(pi_i))]``.
    """
    p = check_exponent(p)
    mats = [as_matrix(A) for A in blocks]
    y = _labels(labels)
    if p == 1:
        A = np.hstack(mats)
        mu, _, rep = train_tv(A, y, loss, TrainConfig(lam, opts))
        return A @ mu.weights, rep.objective
    pis = _block_weights(mats, weights)
    M = np.hstack([A * np.sqrt(pi.weights)[None, :] for A, pi in zip(mats, pis)])
    g, rep = prox_grad_group(M, y, loss, lam, opts)
    return M @ g, rep.objective


def verify_block_reformulation(blocks, labels, loss, lam: float, p, weights=None,
                               tolerance: float = 1e-6, seed=0,
                               opts: SolverOptions = SolverOptions()) -> VerificationReport:
    """Blockwise analogue of :func:`verify_reformulation` for ``p`` in {1, 2}."""
    p = check_exponent(p)
    loss = as_loss(loss)
    if p == 2 and not loss.smooth:
        raise UnsupportedLoss("hinge loss with 2-sum block norms has no LP form")
    y = _labels(labels)
    report = VerificationReport(f"block_reformulation_p{p}", tolerance, floor=1.0)
    try:
        f_star, opt_i = block_feature_optimum(blocks, y, loss, lam, p, weights, opts)
        _, opt_ii = block_hypothesis_optimum(blocks, y, loss, lam, p, weights, opts)
        w = None if p == 1 else _block_weights([as_matrix(A) for A in blocks], weights)
        norm = sum_rkbs_norm(blocks, f_star, p, "joint", opts, weights=w)
        transfer = empirical_risk(loss, f_star, y) + lam * norm
    except RKBSLabError as exc:
        return record_failure(report, seed, exc)
    report.add(seed, opt_i, opt_ii, check="optimum")
    report.add(seed, transfer, opt_ii, check="transfer")
    return report
