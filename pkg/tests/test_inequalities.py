import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kaonbell.errors import DomainError
from kaonbell.inequalities import (
    NOTE_STOCHASTIC_INDEPENDENCE,
    bgh_contradiction,
    bgh_probabilities,
    bgh_probabilities_swapped,
    bgh_projection_probabilities,
    bgh_test,
    ch_evaluate,
    epsilon_prime_test,
    epsilon_test,
)
from kaonbell.kaon_core import MixingParams

from .oracles import deterministic_ch_values, kron_probability

EPS_MEASURED = cmath.rect(2.284e-3, math.radians(43.52))
R2 = 1 / math.sqrt(2)

probs = st.floats(0, 1)


class TestClauserHorne:
    def test_all_zero(self):
        r = ch_evaluate(0, 0, 0, 0, 0, 0)
        assert (r.lhs, r.rhs, r.violated) == (0, 0, False)

    def test_stated_violation(self):
        r = ch_evaluate(0.25, 0, 0.25, 0.25, 0.25, 0.25)
        assert r.lhs == 0.75 and r.rhs == 0.5
        assert r.violated and r.margin == -0.25

    def test_deterministic_assignments_never_violate(self):
        assert max(deterministic_ch_values()) == 0
        for a1, a3, b2, b4 in itertools.product((0, 1), repeat=4):
            r = ch_evaluate(a1 * b2, a1 * b4, a3 * b2, a3 * b4, a3, b2)
            assert not r.violated

    @given(probs, probs, probs, probs)
    def test_product_distributions_never_violate(self, a1, a3, b2, b4):
        r = ch_evaluate(a1 * b2, a1 * b4, a3 * b2, a3 * b4, a3, b2)
        assert r.margin >= -1e-15

    def test_random_mixtures_of_strategies(self):
        rng = np.random.default_rng(7)
        strategies = np.array(list(itertools.product((0, 1), repeat=4)), dtype=float)
        for _ in range(1000):
            w = rng.dirichlet(np.full(16, 0.3))
            a1, a3, b2, b4 = strategies.T
            r = ch_evaluate(w @ (a1 * b2), w @ (a1 * b4), w @ (a3 * b2), w @ (a3 * b4), w @ a3, w @ b2)
            assert r.margin >= -1e-12

    @pytest.mark.parametrize("bad", [-0.1, 1.5, math.nan])
    def test_out_of_range(self, bad):
        with pytest.raises(DomainError):
            ch_evaluate(bad, 0, 0, 0, 0, 0)

    def test_sign_pattern_note_present(self):
        assert ch_evaluate(0, 0, 0, 0, 0, 0).assumption_notes


class TestEpsilonPrime:
    def test_zero_boundary(self):
        r = epsilon_prime_test(0)
        assert r.lhs == r.rhs == 0 and not r.violated

    def test_pure_imaginary(self):
        r = epsilon_prime_test(1e-3j)
        assert r.lhs == 0 and r.rhs == pytest.approx(3e-6) and not r.violated

    def test_representative_value(self):
        r = epsilon_prime_test(3.8e-6)
        assert r.lhs == pytest.approx(3.8e-6, rel=1e-15)
        assert r.rhs == pytest.approx(4.332e-11, rel=1e-12)
        assert r.violated and r.rhs / r.lhs < 1e-4

    def test_notes(self):
        r = epsilon_prime_test(1e-3)
        assert NOTE_STOCHASTIC_INDEPENDENCE in r.assumption_notes
        assert len(r.assumption_notes) >= 2


class TestEpsilon:
    def test_zero(self):
        r = epsilon_test(0)
        assert r.margin == 0 and not r.violated

    def test_measured_value(self):
        r = epsilon_test(EPS_MEASURED)
        assert r.lhs == pytest.approx(1.6562061604918428e-3, abs=1e-15)
        assert r.rhs == pytest.approx(5.216656e-6, abs=1e-15)
        assert r.violated
        assert r.details["ratio"] == pytest.approx(317.48425820906016, rel=1e-12)

    def test_negative_real(self):
        r = epsilon_test(-1e-3)
        assert not r.violated and r.rhs == pytest.approx(1e-6)

    def test_notes_nonempty(self):
        assert epsilon_test(EPS_MEASURED).assumption_notes


class TestBghProbabilities:
    def test_cp_conserving(self):
        a, b, c = bgh_probabilities(MixingParams(0, 0))
        assert (a, b, c) == (0.25, 0.0, 0.25)

    @given(st.floats(0, 0.05), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
    def test_against_kron_oracle(self, r, ph, alpha):
        m = MixingParams(cmath.rect(r, ph), alpha)
        p, q, n = m.p, m.q, math.sqrt(abs(m.p) ** 2 + abs(m.q) ** 2)
        k_s = np.array([p, -q]) / n
        k0bar, k0 = np.array([0, 1]), np.array([1, 0])
        k_plus = np.array([R2, -R2 * cmath.exp(1j * alpha)])
        expected = (kron_probability(k_s, k0bar), kron_probability(k_s, k_plus), kron_probability(k_plus, k0bar))
        np.testing.assert_allclose(bgh_probabilities(m), expected, atol=1e-12, rtol=0)
        np.testing.assert_allclose(bgh_projection_probabilities(m), expected, atol=1e-12, rtol=0)
        swapped = (kron_probability(k_s, k0), kron_probability(k_s, k_plus), kron_probability(k_plus, k0))
        np.testing.assert_allclose(bgh_probabilities_swapped(m), swapped, atol=1e-12, rtol=0)

    def test_sqrt_normalization_fails_at_zero(self):
        # |p|^2 / (2 sqrt(|p|^2+|q|^2)) at eps = 0 would be 1/(2 sqrt 2), not the inner product 1/4
        assert bgh_probabilities(MixingParams(0))[0] != pytest.approx(1 / (2 * math.sqrt(2)))


class TestBghTest:
    def test_zero_eps_boundary(self):
        for swap in (False, True):
            r = bgh_test(MixingParams(0), swap)
            assert r.margin == 0 and not r.violated

    def test_measured_eps(self):
        r = bgh_test(MixingParams(EPS_MEASURED))
        assert r.violated
        assert r.margin == pytest.approx(-3.31240822412715e-3, abs=1e-14)
        assert not bgh_test(MixingParams(EPS_MEASURED), swap_flavor=True).violated

    @given(st.floats(-0.1, 0.1))
    def test_pure_imaginary_boundary(self, y):
        for swap in (False, True):
            assert bgh_test(MixingParams(1j * y), swap).margin == pytest.approx(0, abs=1e-15)

    def test_contradiction(self):
        res = bgh_contradiction(MixingParams(EPS_MEASURED))
        assert not res["both_hold"]
        assert res["p_minus_q"] == pytest.approx(3.31240822412715e-3, abs=1e-14)

    def test_phase_form_matches_probability_form(self):
        m = MixingParams(0.02 + 0.01j, 0.4)
        d = bgh_test(m).details
        n2 = m.norm2
        # probability margin = (|q|^2 - Re(e^{ia} p q*)) / (2 (|p|^2 + |q|^2))
        assert d["probabilities"]["margin"] == pytest.approx(d["phase_form"]["margin"] / (2 * n2), abs=1e-15)

    def test_reduction_consistency_1000_random(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            eps = cmath.rect(rng.uniform(0, 0.05), rng.uniform(-math.pi, math.pi))
            m = MixingParams(eps, rng.uniform(-math.pi, math.pi))
            for swap in (False, True):
                r = bgh_test(m, swap)
                at_max = r.details["probabilities_at_alpha_max"]["margin"]
                assert np.sign(round(at_max, 15)) == np.sign(round(r.margin, 15))

    def test_alpha_max_attains_bound(self):
        m = MixingParams(0.03 - 0.02j)
        d = bgh_test(m).details
        assert d["phase_form"]["lhs"] <= abs(m.p) * abs(m.q) + 1e-15
        m_star = MixingParams(m.epsilon, d["alpha_max"])
        cross = (cmath.exp(1j * m_star.alpha) * m.p * m.q.conjugate()).real
        assert cross == pytest.approx(abs(m.p) * abs(m.q), rel=1e-14)
