import numpy as np
import pytest

from rkbslab.errors import BudgetExceeded, NotRepresentable, RKBSLabError
from rkbslab.learn import TrainConfig, lambda_max, train_tv
from rkbslab.oracle import OracleBudget, oracle_eigensolve, oracle_min_l1, oracle_subgradient
from rkbslab.solvers import min_l1_interpolate

# eigenvalues of A A^T for the 3x6 matrix below, confirmed at 40 digits
A_FROZEN = np.array([[1.0, 0.5, -0.3, 2.0, 0.0, 1.2],
                     [0.2, -1.0, 0.7, 0.4, 1.5, -0.6],
                     [0.9, 0.3, 1.1, -0.8, 0.2, 0.5]])
EIG_FROZEN = [6.881170587030512, 4.287832882909531, 2.9509965300599617]


def test_min_l1_examples():
    assert oracle_min_l1([[2.0, -1.0]], [2.0]) == 1.0
    assert oracle_min_l1([[2.0, -1.0]], [0.0]) == 0.0
    with pytest.raises(NotRepresentable):
        oracle_min_l1([[1.0], [1.0]], [1.0, 0.0])


def test_min_l1_matches_solver():
    rng = np.random.default_rng(70)
    for _ in range(30):
        A = rng.normal(size=(2, 6))
        f = rng.normal(size=2)
        _, rep = min_l1_interpolate(A, f)
        assert abs(oracle_min_l1(A, f) - rep.objective) <= 1e-8 * max(1.0, rep.objective)


def test_min_l1_permutation_invariant():
    rng = np.random.default_rng(71)
    for _ in range(10):
        A = rng.normal(size=(3, 8))
        f = rng.normal(size=3)
        base = oracle_min_l1(A, f)
        perm = rng.permutation(8)
        assert abs(oracle_min_l1(A[:, perm], f) - base) <= 1e-12 * max(1.0, base)


def test_budget():
    with pytest.raises(BudgetExceeded):
        oracle_min_l1(np.ones((4, 5)), np.ones(4))
    with pytest.raises(BudgetExceeded):
        oracle_min_l1(np.ones((1, 13)), np.ones(1))
    with pytest.raises(BudgetExceeded):
        oracle_eigensolve(np.eye(17))
    with pytest.raises(RKBSLabError):
        OracleBudget(max_cols=0)


def test_eigensolve_examples():
    np.testing.assert_array_equal(oracle_eigensolve(np.eye(3)), [1.0, 1.0, 1.0])
    np.testing.assert_array_equal(oracle_eigensolve([[2.0, 0.0], [0.0, 1.0]]), [2.0, 1.0])
    np.testing.assert_allclose(oracle_eigensolve(A_FROZEN @ A_FROZEN.T), EIG_FROZEN, rtol=1e-13)


def test_eigensolve_factor_identity():
    rng = np.random.default_rng(72)
    for n in (1, 4, 9, 16):
        B = rng.normal(size=(n, n + 3))
        ev = oracle_eigensolve(B @ B.T)
        s = np.linalg.svd(B, compute_uv=False)
        np.testing.assert_allclose(ev, s**2, rtol=0, atol=1e-8 * ev[0])
        assert np.all(np.diff(ev) <= 0)


def test_subgradient_threshold_and_zero():
    rng = np.random.default_rng(73)
    A = rng.normal(size=(4, 6))
    y = rng.normal(size=4)
    top = lambda_max(A, y)
    assert oracle_subgradient(A, y, "squared", top) == pytest.approx(float(np.mean(y**2)), abs=1e-6)
    assert oracle_subgradient(A, np.zeros(4), "squared", 0.1) == 0.0


def test_subgradient_bounds_training_from_above():
    rng = np.random.default_rng(74)
    for _ in range(3):
        A = rng.normal(size=(4, 6))
        y = rng.normal(size=4)
        lam = 0.3 * lambda_max(A, y)
        _, _, rep = train_tv(A, y, "squared", TrainConfig(lam))
        upper = oracle_subgradient(A, y, "squared", lam)
        assert rep.objective - 1e-12 <= upper <= rep.objective + 1e-3
