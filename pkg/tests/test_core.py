import math

import numpy as np
import pytest

from softlip.core import (
    Logits,
    SimplexPoint,
    Temperature,
    boundary_point,
    jacobian,
    log_sum_exp,
    m_of_s,
    softmax,
)

# Frozen oracle values. The log-sum-exp value is the direct unshifted
# summation log(e^3 + e^1 + e^0.2); the softmax probabilities come from a
# 60-digit mpmath evaluation of exp(0.7 x_i) / sum_j exp(0.7 x_j).
LSE_3_1_02 = 3.1791041747850026
SOFTMAX_2_M1_05_LAM07 = (0.6791659566259548, 0.08316823723943405, 0.2376658061346112)


def dyadic_logits(rng, n, scale=5.0):
    """Logits on a 2^-20 grid so that adding a constant is exact in float64."""
    grid = 2.0**-20
    k = int(scale / grid)
    return rng.integers(-k, k + 1, size=n) * grid


class TestLogSumExp:
    def test_symmetric_two_point(self):
        assert log_sum_exp([0.0, 0.0]) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_large_logits_no_overflow(self):
        assert log_sum_exp([1000.0, 1000.0]) == 1000.0 + math.log(2.0)

    def test_direct_summation_oracle(self):
        assert log_sum_exp([3.0, 1.0, 0.2]) == pytest.approx(LSE_3_1_02, abs=1e-13)

    def test_temperature_scaling(self):
        # (1/lam) log sum exp(lam x) at x = (0, 0) is ln(2)/lam
        assert log_sum_exp([0.0, 0.0], 2.0) == pytest.approx(math.log(2.0) / 2.0, abs=1e-15)

    def test_shift_property(self):
        # Exact up to the final addition's rounding when x + c introduces
        # no rounding itself; dyadic inputs guarantee that.
        rng = np.random.default_rng(11)
        for _ in range(200):
            x = dyadic_logits(rng, int(rng.integers(2, 9)))
            c = float(rng.integers(-100 * 2**20, 100 * 2**20 + 1)) * 2.0**-20
            lhs = log_sum_exp(x + c)
            rhs = log_sum_exp(x) + c
            assert abs(lhs - rhs) <= 4.0 * np.finfo(float).eps * max(1.0, abs(rhs))


class TestSoftmax:
    def test_uniform(self):
        s = softmax([0.0, 0.0, 0.0, 0.0])
        np.testing.assert_array_equal(s.probs, np.full(4, 0.25))
        assert not s.clamped

    def test_half_mass_point(self):
        # logits (ln 9, 0, ..., 0) in R^10 put exactly half the mass first
        x = np.zeros(10)
        x[0] = math.log(9.0)
        s = softmax(x)
        assert s.probs[0] == pytest.approx(0.5, abs=1e-15)
        np.testing.assert_allclose(s.probs[1:], 1.0 / 18.0, rtol=1e-14)

    def test_extended_precision_oracle(self):
        s = softmax([2.0, -1.0, 0.5], 0.7)
        np.testing.assert_allclose(s.probs, SOFTMAX_2_M1_05_LAM07, rtol=1e-14)

    def test_shift_invariance_exact(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            x = dyadic_logits(rng, int(rng.integers(2, 13)))
            c = float(rng.integers(-100 * 2**20, 100 * 2**20 + 1)) * 2.0**-20
            a = softmax(x).probs
            b = softmax(x + c).probs
            assert np.max(np.abs(a - b)) == 0.0

    def test_underflow_clamp_keeps_interior(self):
        s = softmax([0.0, -800.0])
        assert s.clamped
        assert s.probs.min() > 0.0
        assert abs(s.probs.sum() - 1.0) <= 2e-12

    def test_extreme_example_logits_stay_interior(self):
        x = np.full(10, -2000.0)
        x[0] = x[1] = 0.0
        s = softmax(x)
        assert s.clamped
        assert s.probs.min() > 0.0

    def test_rejects_single_logit(self):
        with pytest.raises(ValueError):
            softmax([1.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            softmax([np.nan, 0.0])
        with pytest.raises(ValueError):
            softmax([np.inf, 0.0])

    def test_rejects_bad_temperature(self):
        with pytest.raises(ValueError):
            softmax([0.0, 1.0], 0.0)
        with pytest.raises(ValueError):
            Temperature(-1.0)


class TestJacobian:
    def test_symmetric_two_point(self):
        j = jacobian(SimplexPoint(np.array([0.5, 0.5])), 1.0)
        np.testing.assert_array_equal(
            j.matrix, np.array([[0.25, -0.25], [-0.25, 0.25]])
        )

    def test_half_mass_diagonal_and_row_sum(self):
        x = np.zeros(10)
        x[0] = math.log(9.0)
        j = jacobian(softmax(x), 1.0)
        assert j.matrix[0, 0] == pytest.approx(0.25, abs=1e-15)
        assert np.abs(j.matrix[0]).sum() == pytest.approx(0.5, abs=1e-15)

    def test_linear_in_temperature(self):
        s = softmax([0.3, -1.2, 0.8, 2.0])
        np.testing.assert_array_equal(jacobian(s, 2.0).matrix, 2.0 * jacobian(s, 1.0).matrix)

    def test_exactly_symmetric(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            s = softmax(rng.uniform(-5, 5, size=int(rng.integers(2, 13))))
            mat = jacobian(s, 1.0).matrix
            np.testing.assert_array_equal(mat, mat.T)

    def test_finite_difference_agreement(self):
        rng = np.random.default_rng(42)
        h = 1e-5
        for _ in range(30):
            n = int(rng.integers(2, 13))
            x = rng.uniform(-5, 5, size=n)
            for lam in (0.5, 1.0, 2.0):
                j = jacobian(softmax(x, lam), lam).matrix
                fd = np.empty((n, n))
                for k in range(n):
                    e = np.zeros(n)
                    e[k] = h
                    fd[:, k] = (softmax(x + e, lam).probs - softmax(x - e, lam).probs) / (2 * h)
                np.testing.assert_allclose(j, fd, atol=1e-6)

    def test_gradient_of_log_sum_exp_is_softmax(self):
        rng = np.random.default_rng(7)
        h = 1e-6
        for _ in range(20):
            n = int(rng.integers(2, 10))
            x = rng.uniform(-4, 4, size=n)
            lam = float(rng.choice([0.5, 1.0, 2.0]))
            grad = np.empty(n)
            for k in range(n):
                e = np.zeros(n)
                e[k] = h
                grad[k] = (log_sum_exp(x + e, lam) - log_sum_exp(x - e, lam)) / (2 * h)
            np.testing.assert_allclose(grad, softmax(x, lam).probs, atol=1e-8)

    def test_zero_row_sums(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            lam = float(rng.choice([0.25, 1.0, 4.0]))
            mat = jacobian(softmax(rng.uniform(-6, 6, size=8), lam), lam).matrix
            assert np.abs(mat.sum(axis=1)).max() <= 1e-14 * lam

    def test_positive_semidefinite(self):
        rng = np.random.default_rng(13)
        for n in (2, 5, 16, 64):
            mat = jacobian(softmax(rng.uniform(-5, 5, size=n)), 1.0).matrix
            assert np.linalg.eigvalsh(mat).min() >= -1e-12


class TestMOfS:
    def test_one_hot_gives_zero(self):
        e = np.zeros(6)
        e[2] = 1.0
        np.testing.assert_array_equal(m_of_s(e), np.zeros((6, 6)))

    def test_two_point_boundary_block(self):
        s = np.zeros(5)
        s[0] = s[1] = 0.5
        mat = m_of_s(s)
        np.testing.assert_array_equal(mat[:2, :2], [[0.25, -0.25], [-0.25, 0.25]])
        np.testing.assert_array_equal(mat[2:, :], np.zeros((3, 5)))
        np.testing.assert_array_equal(mat[:, 2:], np.zeros((5, 3)))

    def test_uniform_three(self):
        expected = np.eye(3) / 3.0 - np.ones((3, 3)) / 9.0
        np.testing.assert_allclose(m_of_s(np.full(3, 1.0 / 3.0)), expected, atol=1e-16)

    def test_accepts_simplex_point(self):
        s = softmax([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(m_of_s(s), m_of_s(s.probs))


class TestDomainTypes:
    def test_simplex_point_rejects_boundary(self):
        with pytest.raises(ValueError):
            SimplexPoint(np.array([1.0, 0.0]))

    def test_simplex_point_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            SimplexPoint(np.array([0.6, 0.6]))

    def test_boundary_point_allows_zeros(self):
        b = boundary_point([0.5, 0.5, 0.0])
        assert b.sum() == 1.0

    def test_boundary_point_rejects_negative(self):
        with pytest.raises(ValueError):
            boundary_point([0.6, 0.5, -0.1])

    def test_logits_frozen(self):
        x = Logits(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            x.values[0] = 9.0
