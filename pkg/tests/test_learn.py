import math

import numpy as np
import pytest

from rkbslab.activation import ActivationFamily, assemble_matrix
from rkbslab.errors import AlignmentError, UnsupportedLoss
from rkbslab.learn import (SampleMeasure, TrainConfig, block_feature_optimum,
                           block_hypothesis_optimum, certificate, dual_certificate, empirical_risk,
                           extract_representer, hypothesis_optimum, lambda_max, train_tv,
                           verify_block_reformulation, verify_reformulation)
from rkbslab.spaces import DiscreteMeasure, ParameterGrid, tv_norm


def _instance(seed, n=5, m=20):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    grid = ParameterGrid(rng.normal(size=(m, 2)), rng.normal(size=m))
    A = assemble_matrix(ActivationFamily.tanh(), X, grid).entries
    return A, rng.normal(size=n), X, grid


def test_empirical_risk_examples():
    assert empirical_risk("squared", [1.0, 2.0], [1.0, 2.0]) == 0.0
    assert empirical_risk("squared", [0.0], [1.0]) == 1.0
    with pytest.raises(AlignmentError):
        empirical_risk("squared", [0.0, 1.0], [1.0])


def test_logistic_risk_by_hand():
    rng = np.random.default_rng(50)
    t = rng.normal(size=2) * 3
    y = np.array([1.0, -1.0])
    by_hand = 0.5 * (math.log(1 + math.exp(-y[0] * t[0])) + math.log(1 + math.exp(-y[1] * t[1])))
    assert abs(empirical_risk("logistic", t, y) - by_hand) <= 1e-12


def test_hinge_risk():
    assert empirical_risk("hinge", [2.0, 0.5, -1.0], [1.0, 1.0, 1.0]) == pytest.approx(2.5 / 3)


def test_train_threshold_gives_empty_representer():
    A, y, _, grid = _instance(51)
    top = float(np.max(np.abs((2.0 / y.size) * A.T @ y)))
    for lam in (top, 1.5 * top):
        mu, sol, rep = train_tv(A, y, "squared", TrainConfig(lam), grid)
        assert np.all(mu.weights == 0) and sol.size == 0 and sol.to_json() == []
        assert rep.objective == pytest.approx(float(np.mean(y**2)), rel=1e-14)


def test_train_zero_labels():
    A, y, _, _ = _instance(52)
    for strategy in ("full_grid", "exchange"):
        mu, sol, rep = train_tv(A, np.zeros_like(y), "squared", TrainConfig(0.01, strategy=strategy))
        assert np.all(mu.weights == 0) and rep.objective == 0.0 and sol.size == 0


def test_strategies_agree():
    for seed in range(10):
        A, y, _, _ = _instance(100 + seed)
        lam = 0.2 * lambda_max(A, y)
        _, _, full = train_tv(A, y, "squared", TrainConfig(lam))
        _, _, exch = train_tv(A, y, "squared", TrainConfig(lam, strategy="exchange"))
        assert abs(full.objective - exch.objective) <= 1e-5 * max(1.0, abs(full.objective))


def test_exchange_history_nonincreasing():
    A, y, _, _ = _instance(53, n=6, m=40)
    _, _, rep = train_tv(A, y, "squared", TrainConfig(0.05 * lambda_max(A, y), strategy="exchange"))
    h = np.array(rep.history)
    assert h.size > 1 and np.all(np.diff(h) <= 0)


def test_training_kkt_and_representer_bounds():
    A, y, _, grid = _instance(54, n=6, m=30)
    lam = 0.1 * lambda_max(A, y)
    mu, sol, rep = train_tv(A, y, "squared", TrainConfig(lam), grid)
    cert = certificate(A, y, "squared", mu)
    assert np.max(np.abs(cert)) <= lam * (1 + 1e-4)
    for atom in sol.atoms:
        assert abs(cert[atom.index]) >= lam * (1 - 1e-3)
        assert atom.point == grid.atom(atom.index)
    assert sol.size <= A.shape[0]
    assert np.max(np.abs(sol.fitted - A @ mu.weights)) <= 1e-8
    assert tv_norm(sol.measure()) <= tv_norm(mu) + 1e-8


def test_hinge_training_runs():
    A, y, _, _ = _instance(55)
    mu, sol, rep = train_tv(A, np.sign(y), "hinge", TrainConfig(0.05))
    assert rep.optimal
    assert sol.size <= A.shape[0]


def test_dual_certificate_dirac_and_zero():
    A, _, X, grid = _instance(56)
    fam = ActivationFamily.tanh()
    for k in range(X.shape[0]):
        g = dual_certificate(fam, grid, SampleMeasure.dirac(k, X))
        np.testing.assert_array_equal(g, A[k])
    zero = dual_certificate(fam, grid, SampleMeasure(np.zeros(X.shape[0]), X))
    assert np.all(zero == 0)


def test_dual_certificate_matches_transpose_product():
    A, _, X, grid = _instance(57)
    rho = np.random.default_rng(0).normal(size=X.shape[0])
    g = dual_certificate(ActivationFamily.tanh(), grid, SampleMeasure(rho, X))
    np.testing.assert_allclose(g, A.T @ rho, rtol=0, atol=1e-12)


def test_extract_representer_dirac():
    A, y, _, grid = _instance(58)
    w = np.zeros(A.shape[1])
    w[3] = -1.5
    sol = extract_representer(DiscreteMeasure(w), A, grid, y, "squared", 0.1)
    assert sol.size == 1 and sol.atoms[0].index == 3 and sol.atoms[0].weight == -1.5


def test_extract_representer_prunes_dense_measure():
    rng = np.random.default_rng(59)
    base = rng.normal(size=(2, 3))
    # nearly collinear columns: scaled copies of three directions plus noise
    A = np.hstack([base * s for s in (1.0, -0.5, 2.0)]) + 1e-3 * rng.normal(size=(2, 9))
    w = rng.normal(size=9)
    sol = extract_representer(DiscreteMeasure(w), A, None, np.zeros(2), "squared", 0.1)
    assert sol.size <= 2
    np.testing.assert_allclose(sol.fitted, A @ w, rtol=0, atol=1e-8)
    assert tv_norm(sol.measure()) <= np.sum(np.abs(w)) + 1e-8


def test_extract_representer_zero():
    A, y, _, grid = _instance(60)
    sol = extract_representer(DiscreteMeasure(np.zeros(A.shape[1])), A, grid, y, "squared", 0.1)
    assert sol.atoms == ()


def test_reformulation_large_lambda():
    A, y, _, _ = _instance(61)
    lam = 2 * lambda_max(A, y)
    f, value = hypothesis_optimum(A, y, "squared", lam)
    assert np.max(np.abs(f)) <= 1e-10
    assert value == pytest.approx(float(np.mean(y**2)), rel=1e-10)
    assert verify_reformulation(A, y, "squared", lam).passed


def test_reformulation_single_column_closed_form():
    # min (1/2)((mu-1)^2 + (2mu-1)^2) + |mu| has mu = 0.4 and value 0.6
    A = np.array([[1.0], [2.0]])
    y = np.array([1.0, 1.0])
    rep = verify_reformulation(A, y, "squared", 1.0)
    assert rep.passed
    for row in rep.instances:
        assert row["lhs"] == pytest.approx(0.6, abs=1e-9)
        assert row["rhs"] == pytest.approx(0.6, abs=1e-9)


def test_reformulation_random():
    for seed in range(10):
        A, y, _, _ = _instance(200 + seed)
        lam = 0.3 * lambda_max(A, y)
        assert verify_reformulation(A, y, "squared", lam, seed=seed).passed
        assert verify_reformulation(A, np.sign(y), "logistic", 0.3 * lambda_max(A, np.sign(y), "logistic"),
                                    seed=seed).passed


def test_block_reformulation_single_block_matches_plain():
    A, y, _, _ = _instance(62)
    lam = 0.3 * lambda_max(A, y)
    plain = verify_reformulation(A, y, "squared", lam)
    block = verify_block_reformulation([A], y, "squared", lam, 1)
    for a, b in zip(plain.instances, block.instances):
        assert a["lhs"] == pytest.approx(b["lhs"], rel=1e-9)
        assert a["rhs"] == pytest.approx(b["rhs"], rel=1e-9)


def test_block_reformulation_two_singletons():
    lam = 0.5
    blocks = [[[1.0]], [[1.0]]]
    # p=1: s = 1 - lam/2, value lam - lam^2/4; p=2: equal split, value lam/sqrt2 - lam^2/8
    expect = {1: lam - lam**2 / 4, 2: lam / math.sqrt(2) - lam**2 / 8}
    for p in (1, 2):
        _, opt_i = block_feature_optimum(blocks, [1.0], "squared", lam, p, [[1.0], [1.0]])
        _, opt_ii = block_hypothesis_optimum(blocks, [1.0], "squared", lam, p, [[1.0], [1.0]])
        assert opt_i == pytest.approx(expect[p], abs=1e-9)
        assert opt_ii == pytest.approx(expect[p], abs=1e-9)
        assert verify_block_reformulation(blocks, [1.0], "squared", lam, p, [[1.0], [1.0]]).passed


def test_block_reformulation_hinge_p2_unsupported():
    with pytest.raises(UnsupportedLoss):
        verify_block_reformulation([np.eye(2)], [1.0, -1.0], "hinge", 0.1, 2)


def test_hinge_block_reformulation_p1():
    A, y, _, _ = _instance(63)
    rep = verify_block_reformulation([A[:, :10], A[:, 10:]], np.sign(y), "hinge", 0.05, 1)
    assert rep.passed, rep.instances
