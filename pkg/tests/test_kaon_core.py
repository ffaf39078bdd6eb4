import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kaonbell.errors import DomainError
from kaonbell.kaon_core import (
    K0,
    K0BAR,
    EvolutionParams,
    FlavorState,
    MixingParams,
    cp_eigenstates,
    decay_matrix_is_psd,
    epsilon_polar,
    evolve_single,
    mass_components,
    mass_eigenstates,
    mixing_from_epsilon,
    projection_probability,
)

EPS_MEASURED = cmath.rect(2.284e-3, math.radians(43.52))
R2 = 1 / math.sqrt(2)

small_eps = st.builds(
    lambda r, ph: cmath.rect(r, ph),
    st.floats(0, 0.0999), st.floats(-math.pi, math.pi),
)
unit_states = st.builds(
    lambda a, b, c, d: FlavorState(complex(a, b), complex(c, d)),
    *[st.floats(-1, 1)] * 4,
).filter(lambda s: s.norm2() > 1e-3).map(FlavorState.normalized)


def close(s: FlavorState, v, tol=1e-12):
    return np.allclose(s.vector, np.asarray(v, dtype=complex), atol=tol, rtol=0)


class TestMixing:
    def test_cp_conserving_limit(self):
        m = mixing_from_epsilon(0, 0)
        assert m.p == 1 and m.q == 1 and abs(m.p) == abs(m.q)

    def test_measured_epsilon_identity(self):
        m = mixing_from_epsilon(EPS_MEASURED, 0)
        # oracle: 4 Re(eps) from direct complex arithmetic
        assert abs(m.p) ** 2 - abs(m.q) ** 2 == pytest.approx(6.624824641967371e-3, abs=1e-12)

    @given(st.floats(-10, 10))
    def test_pure_imaginary_eps_gives_equal_moduli(self, y):
        m = mixing_from_epsilon(1j * y)
        assert abs(m.p) == pytest.approx(abs(m.q), rel=1e-15)

    @pytest.mark.parametrize("bad", [complex(math.nan, 0), complex(0, math.inf)])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(DomainError):
            mixing_from_epsilon(bad)

    def test_identity_1000_random(self):
        rng = np.random.default_rng(1)
        for re, im in rng.normal(scale=0.3, size=(1000, 2)):
            m = MixingParams(complex(re, im))
            assert abs(m.p) ** 2 - abs(m.q) ** 2 == pytest.approx(4 * re, abs=1e-12)

    def test_alpha_stored_verbatim(self):
        assert mixing_from_epsilon(0.1, 0.7).alpha == 0.7

    def test_polar_constructor(self):
        assert epsilon_polar(2.284e-3, 43.52) == pytest.approx(EPS_MEASURED, abs=1e-18)


class TestBases:
    def test_mass_eigenstates_at_zero(self):
        k_s, k_l = mass_eigenstates(MixingParams(0))
        assert close(k_s, [R2, -R2])
        assert close(k_l, [R2, R2])
        assert abs(k_s.inner(k_l)) < 1e-15

    def test_mass_overlap_measured_eps(self):
        k_s, k_l = mass_eigenstates(MixingParams(EPS_MEASURED))
        assert k_s.is_normalized() and k_l.is_normalized()
        assert k_s.inner(k_l) == pytest.approx(3.312395041358426e-3, abs=1e-14)

    def test_cp_eigenstates(self):
        k_p, k_m = cp_eigenstates(0.0)
        assert close(k_p, [R2, -R2])
        assert abs(k_p.inner(k_m)) < 1e-15
        k_p_pi, _ = cp_eigenstates(math.pi)
        assert close(k_p_pi, [R2, R2])

    def test_k_plus_is_k_s_at_zero(self):
        assert close(cp_eigenstates(0.0)[0], mass_eigenstates(MixingParams(0))[0].vector)

    @given(small_eps, unit_states)
    def test_basis_round_trip(self, eps, s):
        m = MixingParams(eps)
        a_s, a_l = mass_components(s, m)
        k_s, k_l = mass_eigenstates(m)
        assert close(FlavorState.from_vector(a_s * k_s.vector + a_l * k_l.vector), s.vector)

    @given(unit_states)
    def test_completeness_at_zero(self, s):
        k_s, k_l = mass_eigenstates(MixingParams(0))
        total = projection_probability(s, k_s) + projection_probability(s, k_l)
        assert total == pytest.approx(1.0, abs=1e-12)


class TestEvolution:
    @given(unit_states)
    def test_identity_at_zero_time(self, s):
        assert evolve_single(s, 0.0, EvolutionParams(), MixingParams(0.01)) == s

    def test_k_s_survival(self):
        m = MixingParams(0)
        k_s, _ = mass_eigenstates(m)
        out = evolve_single(k_s, 1.0, EvolutionParams(gamma_S=1.0), m)
        assert out.norm2() == pytest.approx(math.exp(-1), abs=1e-14)

    def test_k_s_survival_with_cp_violation(self):
        m = MixingParams(EPS_MEASURED)
        k_s, _ = mass_eigenstates(m)
        out = evolve_single(k_s, 2.5, EvolutionParams(1.0, 0.1, 0.47), m)
        assert out.norm2() == pytest.approx(math.exp(-2.5), rel=1e-12)

    def test_stable_k_l(self):
        m = MixingParams(0)
        _, k_l = mass_eigenstates(m)
        assert evolve_single(k_l, 1.0, EvolutionParams(1.0, 0.0), m).norm2() == pytest.approx(1.0, abs=1e-14)

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            evolve_single(K0, -1.0, EvolutionParams(), MixingParams(0))

    @pytest.mark.parametrize("g_s,g_l", [(1.0, 1.0), (0.5, 1.0), (1.0, -0.1)])
    def test_bad_widths_rejected(self, g_s, g_l):
        with pytest.raises(DomainError):
            EvolutionParams(g_s, g_l)

    def test_eigenvalue_imaginary_parts(self):
        ev = EvolutionParams(1.0, 1.75e-3, 0.474)
        assert ev.lambda_S.imag == pytest.approx(-0.5, abs=1e-15)
        assert ev.lambda_L.imag == pytest.approx(-8.75e-4, abs=1e-15)
        assert ev.lambda_L.real == 0.474

    @settings(max_examples=50)
    @given(
        small_eps,
        unit_states,
        st.floats(0.01, 0.9),
        st.floats(-2, 2),
    )
    def test_norm_non_increasing_in_physical_region(self, eps, s, ratio, dm):
        ev = EvolutionParams(1.0, ratio, dm)
        m = MixingParams(eps)
        if not decay_matrix_is_psd(ev, m):
            return
        norms = [evolve_single(s, t, ev, m).norm2() for t in np.linspace(0, 8, 40)]
        assert norms[0] <= 1 + 1e-12
        assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))

    def test_norm_can_grow_outside_unitarity_bound(self):
        # gamma_L = 0 with non-orthogonal K_S, K_L: Gamma is not PSD
        m = MixingParams(0.05)
        ev = EvolutionParams(1.0, 0.0, 0.0)
        assert not decay_matrix_is_psd(ev, m)
        assert decay_matrix_is_psd(ev, MixingParams(0.05j))


class TestProjection:
    @given(unit_states)
    def test_self_projection(self, s):
        assert projection_probability(s, s) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert projection_probability(K0, K0BAR) == 0.0

    def test_k0_on_k_s(self):
        k_s, _ = mass_eigenstates(MixingParams(0))
        assert projection_probability(K0, k_s) == pytest.approx(0.5, abs=1e-15)

    def test_unnormalized_target_rejected(self):
        with pytest.raises(DomainError):
            projection_probability(K0, FlavorState(1, 1))
