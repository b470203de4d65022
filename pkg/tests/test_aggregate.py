import numpy as np
import pytest

from dempool.aggregate import (
    Descriptor,
    aggregate_first_order,
    aggregate_second_order,
    contribution,
    contributions,
    postprocess,
)
from dempool.errors import DimensionMismatch, EncodingMismatch, ZeroDescriptor
from dempool.features import FeatureSet
from dempool.kernel import second_order_kernel
from dempool.sinkhorn import SinkhornConfig, solve_democratic, solve_gamma_democratic

from conftest import random_fs

TWO = FeatureSet([[1, 0], [1, 1]])


def test_second_order_two_feature_sum():
    desc = aggregate_second_order(TWO)
    np.testing.assert_array_equal(desc.matrix, [[2, 1], [1, 1]])
    assert desc.encoding == "second-explicit"


def test_second_order_single_feature():
    x = np.array([1.5, -2.0, 0.5])
    desc = aggregate_second_order(FeatureSet([x]), [1.0])
    np.testing.assert_allclose(desc.matrix, np.outer(x, x), rtol=1e-15)


def test_second_order_brute_force(rng):
    fs = random_fs(rng, 5, 3)
    a = rng.random(5) + 0.1
    brute = sum(a[i] * np.outer(fs.data[i], fs.data[i]).ravel() for i in range(5))
    np.testing.assert_allclose(aggregate_second_order(fs, a).values, brute, atol=1e-12)


def test_accepts_democratic_weights(rng):
    fs = random_fs(rng, 6, 3)
    w = solve_democratic(second_order_kernel(fs))
    np.testing.assert_array_equal(aggregate_second_order(fs, w).values,
                                  aggregate_second_order(fs, w.alpha).values)


def test_weight_length_mismatch():
    with pytest.raises(DimensionMismatch):
        aggregate_second_order(TWO, [1.0, 2.0, 3.0])
    with pytest.raises(DimensionMismatch):
        aggregate_first_order(TWO, [1.0])


def test_first_order():
    np.testing.assert_array_equal(aggregate_first_order(TWO).values, [2, 1])
    np.testing.assert_array_equal(aggregate_first_order(TWO, [2, 0]).values, [2, 0])


def test_first_order_loop_oracle(rng):
    fs = random_fs(rng, 7, 4)
    a = rng.random(7)
    loop = [sum(a[i] * fs.data[i, j] for i in range(7)) for j in range(4)]
    np.testing.assert_allclose(aggregate_first_order(fs, a).values, loop, atol=1e-12)


def test_linearity_in_weights(rng):
    fs = random_fs(rng, 9, 4)
    a, b = rng.random(9), rng.random(9)
    lhs = aggregate_second_order(fs, a + b).values
    rhs = aggregate_second_order(fs, a).values + aggregate_second_order(fs, b).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_permutation_invariance(rng):
    fs = random_fs(rng, 11, 3)
    a = rng.random(11)
    perm = rng.permutation(11)
    np.testing.assert_allclose(aggregate_second_order(FeatureSet(fs.data[perm]), a[perm]).values,
                               aggregate_second_order(fs, a).values, atol=1e-12)


def test_symmetric_psd(rng):
    fs = random_fs(rng, 20, 6)
    A = aggregate_second_order(fs, rng.random(20)).matrix
    assert np.array_equal(A, A.T)
    assert np.linalg.eigvalsh(A).min() >= -1e-10 * np.trace(A)


def test_gamma_one_equals_sum_pooling_exactly(rng):
    fs = random_fs(rng, 14, 5)
    w = solve_gamma_democratic(second_order_kernel(fs), SinkhornConfig(gamma=1.0))
    assert np.array_equal(aggregate_second_order(fs, w).values, aggregate_second_order(fs).values)


def test_contribution_orthonormal():
    fs = FeatureSet(np.eye(2))
    xi = aggregate_second_order(fs)
    assert contribution(0, fs, None, xi) == pytest.approx(1.0, abs=1e-15)


def test_contribution_explicit_oracle(rng):
    fs = random_fs(rng, 6, 3)
    a = rng.random(6) + 0.5
    xi = aggregate_second_order(fs, a)
    for i in range(6):
        phi = np.outer(fs.data[i], fs.data[i]).ravel()
        assert contribution(i, fs, a, xi) == pytest.approx(a[i] * phi @ xi.values, rel=1e-10)


def test_contribution_first_order(rng):
    fs = random_fs(rng, 5, 3)
    xi = aggregate_first_order(fs)
    np.testing.assert_allclose(contributions(fs, None, xi), fs.data @ fs.data.sum(axis=0))


def test_democratic_equalizes_contributions(rng):
    fs = random_fs(rng, 25, 6)
    w = solve_democratic(second_order_kernel(fs), SinkhornConfig(iterations=100))
    C = contributions(fs, w, aggregate_second_order(fs, w))
    assert (C.max() - C.min()) / C.mean() <= 0.01


def test_contribution_errors(rng):
    fs = random_fs(rng, 3, 2)
    xi = aggregate_second_order(fs)
    with pytest.raises(IndexError):
        contribution(3, fs, None, xi)
    with pytest.raises(EncodingMismatch):
        contributions(random_fs(rng, 3, 3), None, xi)
    with pytest.raises(EncodingMismatch):
        contributions(fs, None, Descriptor(np.ones(5), "second-sketch"))


def test_postprocess_arithmetic():
    out = postprocess(Descriptor([4.0, -9.0], "first"))
    np.testing.assert_allclose(out.values, np.array([2.0, -3.0]) / np.sqrt(13), rtol=1e-15)
    assert out.normalized


def test_postprocess_fixed_point():
    np.testing.assert_array_equal(postprocess(Descriptor([1.0, 0.0], "first")).values, [1.0, 0.0])


def test_postprocess_unit_norm(rng):
    for _ in range(10):
        out = postprocess(Descriptor(rng.standard_normal(50) * 10, "second-sketch"))
        assert abs(np.linalg.norm(out.values) - 1) <= 1e-12


def test_postprocess_zero():
    with pytest.raises(ZeroDescriptor):
        postprocess(Descriptor(np.zeros(4), "first"))
