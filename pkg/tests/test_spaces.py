import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rkbslab.errors import (AlignmentError, EmptyInputError, NotAbsolutelyContinuous, RKBSLabError,
                            UnsupportedExponent)
from rkbslab.spaces import (BlockMeasure, DensityVector, DiscreteMeasure, ParameterGrid,
                            ProbabilityWeights, SingularPartition, block_norm, check_exponent,
                            lp_norm, measure_from_blocks, split_to_blocks, tv_norm)


def test_tv_norm_examples():
    assert tv_norm(DiscreteMeasure([1.0, -2.0, 0.5])) == 3.5
    assert tv_norm(DiscreteMeasure(np.zeros(4))) == 0.0


def test_tv_norm_reverse_summation():
    w = np.random.default_rng(2).normal(size=20)
    rev = 0.0
    for v in w[::-1]:
        rev += abs(v)
    assert abs(tv_norm(w) - rev) <= 1e-12


def test_lp_norm_examples():
    pi = ProbabilityWeights([0.5, 0.5])
    assert lp_norm(DensityVector([2.0, 2.0]), pi, 2) == pytest.approx(2.0, rel=1e-15)
    assert lp_norm(DensityVector([2.0, 2.0]), pi, 1) == 2.0


def test_lp_embedding_on_random_draws():
    rng = np.random.default_rng(4)
    for _ in range(100):
        k = int(rng.integers(1, 12))
        h = rng.normal(size=k) * rng.exponential(size=k)
        pi = ProbabilityWeights.normalized(rng.uniform(0.01, 1.0, size=k))
        assert lp_norm(h, pi, 1) <= lp_norm(h, pi, 2) * (1 + 1e-15)


def test_exponent_checks():
    assert check_exponent(2.0) == 2
    for bad in (3, 1.5, 0, "2"):
        with pytest.raises(UnsupportedExponent):
            check_exponent(bad)


def test_block_norm_examples():
    a, b = DiscreteMeasure([3.0]), DiscreteMeasure([-4.0])
    assert block_norm(BlockMeasure((a.weights, b.weights), 2)) == 5.0
    assert block_norm(BlockMeasure((a.weights, b.weights), 1)) == 7.0
    for p in (1, 2):
        assert block_norm(BlockMeasure(([1.0, -2.0],), p)) == 3.0
    lp = BlockMeasure(([2.0, 2.0],), 2, "lp", ([0.5, 0.5],))
    assert lp.block_norms()[0] == pytest.approx(2.0)
    assert BlockMeasure(([1.0],), 1).q == float("inf")
    assert BlockMeasure(([1.0],), 2).q == 2.0


def test_probability_weights_validation():
    with pytest.raises(RKBSLabError):
        ProbabilityWeights([0.5, 0.6])
    with pytest.raises(RKBSLabError):
        ProbabilityWeights([1.5, -0.5])
    with pytest.raises(EmptyInputError):
        ProbabilityWeights([])
    assert ProbabilityWeights.uniform(4).weights.sum() == 1.0


def test_partition_validation():
    with pytest.raises(RKBSLabError):
        SingularPartition(([0, 1], [1, 2]), ([0.5, 0.5], [0.5, 0.5]), 3)
    with pytest.raises(RKBSLabError):
        SingularPartition(([0, 1],), ([1.0, 0.0],), 2)
    with pytest.raises(AlignmentError):
        SingularPartition(([0, 5],), ([0.5, 0.5],), 3)
    P = SingularPartition(([2], [0]), ([1.0], [1.0]), 3)
    assert not P.covers()
    assert P.owner().tolist() == [1, -1, 0]
    assert SingularPartition.from_json(P.to_json()).to_json() == P.to_json()


def test_grid_rejects_duplicate_atoms():
    with pytest.raises(RKBSLabError):
        ParameterGrid([[1.0], [1.0]], [0.0, 0.0])


def test_measure_from_blocks_examples():
    P = SingularPartition(([0, 1, 2, 3],), (ProbabilityWeights.uniform(4),), 4)
    mu = measure_from_blocks(P, [DensityVector(np.full(4, 4.0))])
    np.testing.assert_array_equal(mu.weights, np.ones(4))
    assert tv_norm(mu) == 4.0
    Q = SingularPartition(([0], [1]), ([1.0], [1.0]), 2)
    mu = measure_from_blocks(Q, [[2.0], [-3.0]])
    assert mu.weights.tolist() == [2.0, -3.0]
    assert tv_norm(mu) == 5.0


def test_split_examples():
    Q = SingularPartition(([0], [1]), ([1.0], [1.0]), 2)
    h = split_to_blocks(DiscreteMeasure([2.0, -3.0]), Q)
    assert [d.values.tolist() for d in h] == [[2.0], [-3.0]]
    z = split_to_blocks(DiscreteMeasure([0.0, 0.0]), Q)
    assert all(np.all(d.values == 0) for d in z)


def test_split_requires_absolute_continuity():
    P = SingularPartition(([0],), ([1.0],), 2)
    with pytest.raises(NotAbsolutelyContinuous):
        split_to_blocks(DiscreteMeasure([1.0, 1.0]), P)


def _random_partition(rng, m):
    perm = rng.permutation(m)
    k = int(rng.integers(1, m + 1))
    cuts = np.sort(rng.choice(np.arange(1, m), size=k - 1, replace=False)) if k > 1 else []
    blocks = np.split(perm, cuts)
    weights = [ProbabilityWeights.normalized(rng.uniform(0.1, 1.0, size=b.size)) for b in blocks]
    return SingularPartition(tuple(blocks), tuple(weights), m)


def test_tv_equals_sum_of_block_l1():
    rng = np.random.default_rng(9)
    for _ in range(50):
        m = int(rng.integers(1, 30))
        P = _random_partition(rng, m)
        dens = [rng.normal(size=b.size) for b in P.blocks]
        lhs = tv_norm(measure_from_blocks(P, dens))
        rhs = sum(lp_norm(h, pi, 1) for h, pi in zip(dens, P.weights))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, lhs)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=2**31))
def test_round_trip_property(m, seed):
    rng = np.random.default_rng(seed)
    P = _random_partition(rng, m)
    dens = [rng.normal(size=b.size) for b in P.blocks]
    back = split_to_blocks(measure_from_blocks(P, dens), P)
    for h, g in zip(dens, back):
        np.testing.assert_allclose(g.values, h, rtol=1e-15, atol=0)
    mu = DiscreteMeasure(rng.normal(size=m))
    again = measure_from_blocks(P, split_to_blocks(mu, P))
    np.testing.assert_allclose(again.weights, mu.weights, rtol=1e-15, atol=0)
