import math

import numpy as np
import pytest

from softlip.core import m_of_s, softmax
from softlip.lipschitz import (
    ScsaParams,
    WitnessPair,
    closed_form_linf,
    cocoercivity_check,
    global_bound,
    local_lipschitz,
    scsa_bound,
    scsa_bound_unrefined,
    witness_attained,
    witness_example_pair,
    witness_limit_sequence,
)
from softlip.opnorm import opnorm_inf, opnorm_two, vector_norm

# Measured secant ratio of the near-attaining pair in R^10 with K = 20 and
# a 1e-4 step along the top Jacobian eigenvector; norm-independent.
EXAMPLE_RATIO = 0.49999999504472

# n = 2 variant at x = (0, 0): the exact ratio is tanh(a) / (2a) with
# a = eps / sqrt(2); frozen from a 60-digit mpmath evaluation at eps = 1e-4.
EXAMPLE_RATIO_N2 = 0.49999999916666665


class TestGlobalBound:
    def test_values(self):
        assert global_bound(1.0) == 0.5
        assert global_bound(2.0) == 1.0
        assert global_bound(0.5) == 0.25


class TestLocalLipschitz:
    def test_half_mass_point_p1_exact(self):
        x = np.zeros(10)
        x[0] = math.log(9.0)
        est = local_lipschitz(x, 1.0, 1)
        assert est.exact
        assert abs(est.upper - 0.5) <= 1e-14

    def test_uniform_inf_closed_form(self):
        for n in (2, 3, 7):
            est = local_lipschitz(np.zeros(n), 1.0, "inf")
            expected = 2.0 * (1.0 / n) * (1.0 - 1.0 / n)
            assert est.upper == pytest.approx(expected, rel=1e-14)
            # cross-check the closed form against the generic row-sum norm
            mat = m_of_s(softmax(np.zeros(n)).probs)
            assert est.upper == pytest.approx(opnorm_inf(mat), rel=1e-14)

    def test_linear_in_temperature_at_fixed_point(self):
        # The constant is lam * ||M(sig_lam(x))||, so pure lam-scaling holds
        # exactly where the softmax point does not move with lam; the
        # uniform point is such a point for every lam.
        x = np.zeros(6)
        one = local_lipschitz(x, 1.0, 2)
        three = local_lipschitz(x, 3.0, 2)
        assert three.upper == pytest.approx(3.0 * one.upper, rel=1e-12)

    def test_temperature_enters_through_point_and_scale(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(-3, 3, size=6)
        lam = 3.0
        est = local_lipschitz(x, lam, 2)
        assert est.upper == pytest.approx(
            lam * opnorm_two(m_of_s(softmax(x, lam).probs)), rel=1e-12
        )

    def test_general_p_bracket(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            x = rng.uniform(-4, 4, size=int(rng.integers(2, 12)))
            lam = float(rng.choice([0.25, 1.0, 4.0]))
            for p in (1.5, 3.0):
                est = local_lipschitz(x, lam, p)
                assert 0.0 <= est.lower <= est.upper
                assert est.upper <= lam / 2.0 + 1e-12

    def test_exact_orders_have_witnesses(self):
        x = np.array([0.2, -1.0, 0.7])
        for p in (1, "inf"):
            est = local_lipschitz(x, 2.0, p)
            j = 2.0 * m_of_s(softmax(x, 2.0).probs)
            ratio = vector_norm(j @ est.witness, p) / vector_norm(est.witness, p)
            assert abs(ratio - est.lower) <= 1e-12


class TestWitnessAttained:
    def test_exact_half_for_all_small_n(self):
        for n in range(2, 13):
            for p in (1, "inf"):
                x, constant = witness_attained(n, p)
                assert abs(constant - 0.5) <= 1e-14
                assert abs(softmax(x).probs[0] - 0.5) <= 1e-14

    def test_n2_is_uniform_point(self):
        x, constant = witness_attained(2, 1)
        np.testing.assert_array_equal(x.values, np.zeros(2))
        assert constant == 0.5

    def test_n3_inf(self):
        x, constant = witness_attained(3, "inf")
        assert x.values[0] == pytest.approx(math.log(2.0))
        assert abs(constant - 0.5) <= 1e-14

    def test_rejects_intermediate_orders(self):
        with pytest.raises(ValueError):
            witness_attained(5, 2)
        with pytest.raises(ValueError):
            witness_attained(5, 1.5)


class TestWitnessLimitSequence:
    def test_identity_and_monotonicity(self):
        epsilons = [10.0**-k for k in range(1, 9)]
        for p in (1.5, 2.0, 3.0):
            steps = witness_limit_sequence(5, p, epsilons)
            ratios = [st.certified_ratio for st in steps]
            for st in steps:
                assert abs(st.certified_ratio - (0.5 - st.epsilon)) <= 1e-12
                assert abs(st.certified_ratio - st.closed_form) <= 1e-12
                assert 0.0 < st.delta < 0.5
                assert st.s.min() > 0.0
                assert st.s.sum() == pytest.approx(1.0, abs=1e-14)
            assert ratios == sorted(ratios)  # smaller eps => closer to 1/2

    def test_textbook_value(self):
        (step,) = witness_limit_sequence(5, 2, [0.1])
        assert step.certified_ratio == pytest.approx(0.4, abs=1e-15)

    def test_delta_solves_quadratic(self):
        (step,) = witness_limit_sequence(6, 2.5, [0.3])
        assert 2.0 * step.delta * (1.0 - step.delta) == pytest.approx(0.3, rel=1e-14)

    def test_near_collapse(self):
        (step,) = witness_limit_sequence(5, 2, [0.5 - 1e-15])
        assert step.certified_ratio == pytest.approx(0.0, abs=2e-15)

    def test_rejections(self):
        with pytest.raises(ValueError):
            witness_limit_sequence(5, 2, [0.5])
        with pytest.raises(ValueError):
            witness_limit_sequence(5, 2, [-0.1])
        with pytest.raises(ValueError):
            witness_limit_sequence(2, 2, [0.1])
        with pytest.raises(ValueError):
            witness_limit_sequence(5, 1, [0.1])
        with pytest.raises(ValueError):
            witness_limit_sequence(5, "inf", [0.1])


class TestWitnessExamplePair:
    def test_reference_ratio_all_orders(self):
        for p in (1, 1.5, 2, 3, "inf"):
            pair = witness_example_pair(10, 20.0, 1e-4, p)
            assert pair.ratio == pytest.approx(EXAMPLE_RATIO, abs=1e-9)

    def test_n2_matches_tanh_oracle(self):
        # Cancellation in sig(y) - sig(x) limits the float64 measurement to
        # ~1e-12 here; the Taylor gap being validated is ~8.3e-10.
        pair = witness_example_pair(2, 0.0, 1e-4, 2)
        assert pair.ratio == pytest.approx(EXAMPLE_RATIO_N2, abs=1e-11)

    def test_tiny_step_approaches_but_stays_below_half(self):
        pair = witness_example_pair(10, 20.0, 1e-8, 2)
        assert pair.ratio < 0.5
        assert 0.5 - pair.ratio <= 1e-7  # dominated by the gap of s_1 to 1/2

    def test_n2_tiny_step_exact_ratio_hugs_half_from_below(self):
        """At eps = 1e-8 the exact ratio is 1/2 - eps^2/12, within 1e-12 of
        1/2 and strictly below it. That is far beneath float64 measurement
        noise, so the strict claims are checked with a 50-digit oracle on
        the same constructed pair; the measured ratio only gets a noise
        envelope."""
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 50
        pair = witness_example_pair(2, 0.0, 1e-8, 2)

        def mp_softmax(v):
            m = max(v)
            es = [mp.e ** (t - m) for t in v]
            total = sum(es)
            return [e / total for e in es]

        xs = [mp.mpf(float(t)) for t in pair.x.values]
        ys = [mp.mpf(float(t)) for t in pair.y.values]
        num = sum((b - a) ** 2 for a, b in zip(mp_softmax(xs), mp_softmax(ys))) ** mp.mpf("0.5")
        den = sum((b - a) ** 2 for a, b in zip(xs, ys)) ** mp.mpf("0.5")
        exact = num / den
        assert exact < mp.mpf("0.5")
        assert mp.mpf("0.5") - exact <= mp.mpf("1e-12")
        assert abs(pair.ratio - float(exact)) <= 5e-8

    def test_pair_is_reproducible(self):
        pair = witness_example_pair(6, 20.0, 1e-4, 3)
        assert abs(pair.recompute_ratio() - pair.ratio) == 0.0

    def test_type_rejects_inflated_ratio(self):
        pair = witness_example_pair(4, 20.0, 1e-4, 2)
        with pytest.raises(ValueError):
            WitnessPair(pair.x, pair.y, pair.p, pair.lam, 0.7)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            witness_example_pair(1, 20.0, 1e-4, 2)
        with pytest.raises(ValueError):
            witness_example_pair(5, -1.0, 1e-4, 2)
        with pytest.raises(ValueError):
            witness_example_pair(5, 20.0, 0.0, 2)


class TestUniversalBound:
    def test_brackets_and_secants_below_lambda_half(self):
        rng = np.random.default_rng(99)
        for _ in range(300):
            n = int(rng.integers(2, 17))
            x = rng.uniform(-6, 6, size=n)
            lam = float(rng.choice([0.25, 1.0, 2.0, 4.0]))
            p = rng.choice([1.0, 1.5, 2.0, 3.0, np.inf])
            est = local_lipschitz(x, lam, float(p))
            assert est.upper <= lam / 2.0 + 1e-12
            y = x + rng.normal(size=n) * 10.0 ** rng.uniform(-6, 1)
            num = vector_norm(softmax(y, lam).probs - softmax(x, lam).probs, float(p))
            den = vector_norm(y - x, float(p))
            assert num / den <= lam / 2.0 + 1e-12


class TestNonAttainment:
    def test_interior_points_stay_strictly_below_half(self):
        rng = np.random.default_rng(123)
        for _ in range(400):
            n = int(rng.integers(3, 9))
            logits = rng.uniform(-4, 4, size=n)
            if rng.random() < 0.5:
                # concentrate near the attaining direction: one coordinate
                # close to log(n-1) puts s_1 near 1/2
                logits = np.zeros(n)
                logits[0] = math.log(n - 1.0) + rng.uniform(-0.1, 0.1)
                logits[1:] = rng.uniform(-0.05, 0.05, size=n - 1)
            s = softmax(logits).probs
            assert opnorm_two(m_of_s(s)) < 0.5

    def test_boundary_two_point_support_attains_half(self):
        rng = np.random.default_rng(124)
        for n in (3, 5, 8):
            s = np.zeros(n)
            idx = rng.choice(n, size=2, replace=False)
            s[idx] = 0.5
            for p in (1.5, 2.0, 4.0):
                c = 2.0 ** (-1.0 / p)
                v = np.zeros(n)
                v[idx[0]], v[idx[1]] = c, -c
                ratio = vector_norm(m_of_s(s) @ v, p) / vector_norm(v, p)
                assert ratio == pytest.approx(0.5, abs=1e-15)


class TestCocoercivity:
    def test_identical_points(self):
        x = np.array([0.3, -1.0, 2.0])
        lhs, rhs, holds = cocoercivity_check(x, x, 1.0)
        assert (lhs, rhs, holds) == (0.0, 0.0, True)

    def test_random_pairs(self):
        rng = np.random.default_rng(200)
        for _ in range(500):
            x = rng.normal(size=5) * 3
            y = rng.normal(size=5) * 3
            for lam in (1.0, 10.0):
                lhs, rhs, holds = cocoercivity_check(x, y, lam)
                assert holds
                assert lhs >= rhs - 1e-12

    def test_firmly_nonexpansive_for_small_lambda(self):
        rng = np.random.default_rng(201)
        for _ in range(500):
            n = int(rng.integers(2, 9))
            x = rng.normal(size=n) * 4
            y = rng.normal(size=n) * 4
            for lam in (0.5, 1.0, 2.0):
                diff = softmax(x, lam).probs - softmax(y, lam).probs
                sq = float(diff @ diff)
                inner = float(diff @ (x - y))
                assert sq <= inner + 1e-12

    def test_contractive_regime(self):
        rng = np.random.default_rng(202)
        for lam in (0.5, 1.0, 1.9):
            for _ in range(200):
                x = rng.normal(size=4) * 5
                y = rng.normal(size=4) * 5
                num = vector_norm(softmax(x, lam).probs - softmax(y, lam).probs, 2)
                den = vector_norm(x - y, 2)
                assert num / den <= lam / 2.0 + 1e-12


class TestScsaBound:
    def test_unit_parameters(self):
        params = ScsaParams(n=1, nu=1.0, tau=1.0, eps=1.0, wq_norm=1.0, wk_norm=1.0, wv_norm=1.0)
        assert scsa_bound(params) == 4.0

    def test_hand_evaluated_instance(self):
        params = ScsaParams(n=2, nu=1.0, tau=2.0, eps=4.0, wq_norm=1.0, wk_norm=1.0, wv_norm=1.0)
        assert scsa_bound(params) == 8.0

    def test_homogeneous_in_nu(self):
        a = ScsaParams(n=3, nu=1.0, tau=0.7, eps=2.0, wq_norm=0.4, wk_norm=1.1, wv_norm=0.9)
        b = ScsaParams(n=3, nu=2.0, tau=0.7, eps=2.0, wq_norm=0.4, wk_norm=1.1, wv_norm=0.9)
        assert scsa_bound(b) == pytest.approx(2.0 * scsa_bound(a), rel=1e-15)

    def test_token_count_scaling(self):
        # doubling n multiplies the K-term by 4 and the Q- and V-terms by 2
        base = dict(nu=1.0, tau=1.0, eps=1.0)
        k_term = scsa_bound(ScsaParams(n=2, wq_norm=0, wk_norm=1, wv_norm=0, **base))
        assert k_term == 4.0 * scsa_bound(ScsaParams(n=1, wq_norm=0, wk_norm=1, wv_norm=0, **base))
        q_term = scsa_bound(ScsaParams(n=2, wq_norm=1, wk_norm=0, wv_norm=0, **base))
        assert q_term == 2.0 * scsa_bound(ScsaParams(n=1, wq_norm=1, wk_norm=0, wv_norm=0, **base))

    def test_unrefined_doubles_score_terms(self):
        params = ScsaParams(n=2, nu=1.0, tau=2.0, eps=4.0, wq_norm=1.0, wk_norm=1.0, wv_norm=1.0)
        assert scsa_bound_unrefined(params) == 14.0  # 2*(4 + 2) + 2

    def test_validation(self):
        with pytest.raises(ValueError):
            ScsaParams(n=0, nu=1, tau=1, eps=1, wq_norm=1, wk_norm=1, wv_norm=1)
        with pytest.raises(ValueError):
            ScsaParams(n=1, nu=-1, tau=1, eps=1, wq_norm=1, wk_norm=1, wv_norm=1)
        with pytest.raises(ValueError):
            ScsaParams(n=1, nu=1, tau=1, eps=1, wq_norm=-0.1, wk_norm=1, wv_norm=1)


def test_closed_form_matches_row_norm():
    rng = np.random.default_rng(33)
    for _ in range(30):
        s = softmax(rng.uniform(-5, 5, size=7)).probs
        assert closed_form_linf(s) == pytest.approx(opnorm_inf(m_of_s(s)), rel=1e-14)
