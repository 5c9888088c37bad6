import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from relaxed_svgd import kernels
from relaxed_svgd.kernels import KernelSpec


def fd_grad(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])


def fd_trace_mixed(spec, x, y, h=1e-4):
    total = 0.0
    for e in np.eye(x.size):
        f = lambda a, b: kernels.eval(spec, a, b)
        total += (f(x + h * e, y + h * e) - f(x + h * e, y - h * e) - f(x - h * e, y + h * e) + f(x - h * e, y - h * e)) / (4 * h * h)
    return total


def specs(dim):
    imq = st.builds(
        lambda c, b: KernelSpec.imq(dim, c=c, beta=b),
        st.floats(0.3, 3.0),
        st.floats(-0.95, -0.05),
    )
    rbf = st.builds(lambda h: KernelSpec.rbf(dim, bandwidth=h), st.floats(0.2, 5.0))
    return st.one_of(imq, rbf)


points = arrays(np.float64, 3, elements=st.floats(-3, 3))


class TestEval:
    def test_imq_at_zero_separation(self):
        assert kernels.eval(KernelSpec.imq(2), [0.3, 1.0], [0.3, 1.0]) == pytest.approx(1.0)

    def test_imq_at_sq_distance_three(self):
        x = np.array([math.sqrt(3.0), 0.0])
        assert kernels.eval(KernelSpec.imq(2), x, [0.0, 0.0]) == pytest.approx(0.5)

    def test_rbf_at_zero_separation(self):
        assert kernels.eval(KernelSpec.rbf(3, bandwidth=2.0), np.ones(3), np.ones(3)) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            kernels.eval(KernelSpec.rbf(2), [0.0, 1.0, 2.0], [0.0, 1.0])

    @given(specs(3), points, points)
    def test_symmetric_and_bounded(self, spec, x, y):
        k = kernels.eval(spec, x, y)
        assert k == pytest.approx(kernels.eval(spec, y, x))
        assert 0 < k <= kernels.kernel_bound(spec) ** 2 + 1e-12


class TestGrad1:
    def test_vanishes_on_diagonal(self):
        for spec in (KernelSpec.imq(2), KernelSpec.rbf(2, bandwidth=0.7)):
            np.testing.assert_array_equal(kernels.grad1(spec, [1.0, 2.0], [1.0, 2.0]), [0.0, 0.0])

    def test_imq_unit_offset(self):
        g = kernels.grad1(KernelSpec.imq(2), [1.0, 0.0], [0.0, 0.0])
        np.testing.assert_allclose(g, [-(2 ** -1.5), 0.0], atol=1e-12)
        fd = fd_grad(lambda x: kernels.eval(KernelSpec.imq(2), x, [0.0, 0.0]), [1.0, 0.0])
        np.testing.assert_allclose(g, fd, atol=1e-8)

    def test_rbf_unit_offset(self):
        g = kernels.grad1(KernelSpec.rbf(2), [1.0, 0.0], [0.0, 0.0])
        np.testing.assert_allclose(g, [-math.exp(-0.5), 0.0], atol=1e-12)

    @given(specs(3), points, points)
    def test_matches_finite_difference(self, spec, x, y):
        fd = fd_grad(lambda a: kernels.eval(spec, a, y), x)
        np.testing.assert_allclose(kernels.grad1(spec, x, y), fd, atol=1e-7)


class TestTraceMixed:
    @pytest.mark.parametrize("h,d", [(1.0, 1), (1.0, 2), (0.5, 3), (4.0, 5)])
    def test_rbf_diagonal(self, h, d):
        x = np.linspace(-1, 1, d)
        assert kernels.trace_mixed_second(KernelSpec.rbf(d, bandwidth=h), x, x) == pytest.approx(d / h)

    def test_imq_diagonal_d4(self):
        assert kernels.trace_mixed_second(KernelSpec.imq(4), np.zeros(4), np.zeros(4)) == pytest.approx(4.0)

    @given(specs(3), points, points)
    def test_matches_finite_difference(self, spec, x, y):
        expected = fd_trace_mixed(spec, x, y)
        assert kernels.trace_mixed_second(spec, x, y) == pytest.approx(expected, rel=1e-5, abs=1e-6)


class TestKernelBound:
    @pytest.mark.parametrize(
        "spec,expected",
        [
            (KernelSpec.imq(4), 2.0),
            (KernelSpec.rbf(1, bandwidth=1.0), 1.0),
            (KernelSpec.rbf(4, bandwidth=0.25), 4.0),
            (KernelSpec.rbf(2, bandwidth=4.0), 1.0),
        ],
    )
    def test_closed_forms(self, spec, expected):
        assert kernels.kernel_bound(spec) == pytest.approx(expected)

    @given(specs(2), points.map(lambda a: a[:2]))
    def test_dominates_diagonal(self, spec, x):
        B2 = kernels.kernel_bound(spec) ** 2
        assert kernels.eval(spec, x, x) <= B2 + 1e-12
        assert kernels.trace_mixed_second(spec, x, x) <= B2 + 1e-12


class TestSpec:
    def test_rejects_bad_beta(self):
        for beta in (0.5, 0.0, -1.0):
            with pytest.raises(ValueError):
                KernelSpec.imq(2, beta=beta)

    def test_rejects_bad_bandwidth(self):
        with pytest.raises(ValueError):
            KernelSpec.rbf(2, bandwidth=0.0)

    def test_aliases(self):
        assert kernels.canonical_family("imq") == kernels.IMQ
        assert kernels.canonical_family("rbf") == kernels.RBF
        with pytest.raises(ValueError):
            kernels.canonical_family("laplace")


def test_pairwise_matches_scalar_functions():
    rng = np.random.default_rng(3)
    X, Y = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    for spec in (KernelSpec.imq(3, c=1.3, beta=-0.3), KernelSpec.rbf(3, bandwidth=0.8)):
        K, g1, tr = kernels.pairwise(spec, X, Y)
        for i in range(4):
            for j in range(5):
                assert K[i, j] == pytest.approx(kernels.eval(spec, X[i], Y[j]))
                np.testing.assert_allclose(g1[i, j], kernels.grad1(spec, X[i], Y[j]))
                assert tr[i, j] == pytest.approx(kernels.trace_mixed_second(spec, X[i], Y[j]))


def test_median_bandwidth():
    X = np.array([[0.0], [1.0], [3.0]])
    # squared distances 1, 9, 4 -> median 4
    assert kernels.median_bandwidth(X) == pytest.approx(4.0 / (2 * math.log(4.0)))
    assert kernels.median_bandwidth(np.zeros((1, 2))) == 1.0
    assert kernels.median_bandwidth(np.zeros((3, 2))) == 1.0
