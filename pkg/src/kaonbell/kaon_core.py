"""Single-kaon state algebra.

States are coordinate vectors on the flavor basis ``{|K0>, |K0bar>}``.
Units: tau_S = 1 and hbar = 1, so times are in units of the K_S lifetime
and rates in 1/tau_S.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

NORM_TOL = 1e-12


def _check_finite(z: complex, name: str) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"{name} must be finite, got {z!r}")
    return z


@dataclass(frozen=True)
class FlavorState:
    """Components of a single-kaon state on |K0> and |K0bar>."""

    k0: complex
    k0bar: complex

    @classmethod
    def from_vector(cls, v) -> FlavorState:
        return cls(complex(v[0]), complex(v[1]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.k0, self.k0bar], dtype=complex)

    def norm2(self) -> float:
        return abs(self.k0) ** 2 + abs(self.k0bar) ** 2

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    def normalized(self) -> FlavorState:
        n = math.sqrt(self.norm2())
        if n == 0.0:
            raise DomainError("cannot normalize the zero vector")
        return FlavorState(self.k0 / n, self.k0bar / n)

    def inner(self, other: FlavorState) -> complex:
        """<self|other>."""
        return self.k0.conjugate() * other.k0 + self.k0bar.conjugate() * other.k0bar


K0 = FlavorState(1.0 + 0j, 0j)
K0BAR = FlavorState(0j, 1.0 + 0j)


@dataclass(frozen=True)
class MixingParams:
    """CP-violating mixing: p = 1 + eps, q = 1 - eps, and the CP phase alpha.

    p and q are derived properties so they can never drift from eps.
    """

    epsilon: complex
    alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "epsilon", _check_finite(self.epsilon, "epsilon"))
        if not math.isfinite(self.alpha):
            raise DomainError(f"alpha must be finite, got {self.alpha!r}")
        if self.norm2 == 0.0:
            raise DomainError("|p|^2 + |q|^2 must be positive")

    @property
    def p(self) -> complex:
        return 1.0 + self.epsilon

    @property
    def q(self) -> complex:
        return 1.0 - self.epsilon

    @property
    def norm2(self) -> float:
        """|p|^2 + |q|^2."""
        return abs(self.p) ** 2 + abs(self.q) ** 2


def mixing_from_epsilon(epsilon: complex, alpha: float = 0.0) -> MixingParams:
    return MixingParams(epsilon=epsilon, alpha=float(alpha))


def epsilon_polar(magnitude: float, phase_deg: float) -> complex:
    """Build a complex parameter from magnitude and phase in degrees."""
    return cmath.rect(magnitude, math.radians(phase_deg))


@dataclass(frozen=True)
class EvolutionParams:
    """Effective-Hamiltonian eigenvalues, lambda = m - i*gamma/2.

    The mass origin is m_S = 0, so m_L = delta_m.
    """

    gamma_S: float = 1.0
    gamma_L: float = 0.0
    delta_m: float = 0.0

    def __post_init__(self):
        for name in ("gamma_S", "gamma_L", "delta_m"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not (self.gamma_S > self.gamma_L >= 0.0):
            raise DomainError(
                f"need gamma_S > gamma_L >= 0, got gamma_S={self.gamma_S}, gamma_L={self.gamma_L}"
            )

    @property
    def lambda_S(self) -> complex:
        return complex(0.0, -self.gamma_S / 2)

    @property
    def lambda_L(self) -> complex:
        return complex(self.delta_m, -self.gamma_L / 2)


def mass_eigenstates(m: MixingParams) -> tuple[FlavorState, FlavorState]:
    """Return (K_S, K_L)."""
    n = math.sqrt(m.norm2)
    k_s = FlavorState(m.p / n, -m.q / n)
    k_l = FlavorState(m.p / n, m.q / n)
    return k_s, k_l


def cp_eigenstates(alpha: float) -> tuple[FlavorState, FlavorState]:
    """Return (K_plus, K_minus).

    K_plus = (1, -e^{i alpha})/sqrt(2) coincides with K_S at eps = 0, alpha = 0.
    The sign of the phase is fixed so that P(K_S, K_plus) on the pair state
    is |p e^{i alpha} - q|^2 / (4(|p|^2 + |q|^2)).
    """
    r = 1.0 / math.sqrt(2.0)
    ph = cmath.exp(1j * alpha)
    return FlavorState(r, -r * ph), FlavorState(r, r * ph)


def mass_components(s: FlavorState, m: MixingParams) -> tuple[complex, complex]:
    """Coefficients (a_S, a_L) with s = a_S K_S + a_L K_L.

    K_S and K_L are not orthogonal when Re(eps) != 0, so this is a linear
    solve rather than a pair of projections.
    """
    k_s, k_l = mass_eigenstates(m)
    basis = np.column_stack([k_s.vector, k_l.vector])
    a_s, a_l = np.linalg.solve(basis, s.vector)
    return complex(a_s), complex(a_l)


def evolve_single(s: FlavorState, t: float, ev: EvolutionParams, m: MixingParams) -> FlavorState:
    """Wigner-Weisskopf evolution of a single kaon; the result is unnormalized."""
    if t < 0 or not math.isfinite(t):
        raise DomainError(f"t must be finite and >= 0, got {t!r}")
    if t == 0:
        return s
    a_s, a_l = mass_components(s, m)
    k_s, k_l = mass_eigenstates(m)
    a_s *= cmath.exp(-1j * ev.lambda_S * t)
    a_l *= cmath.exp(-1j * ev.lambda_L * t)
    return FlavorState.from_vector(a_s * k_s.vector + a_l * k_l.vector)


def evolution_matrix(t: float, ev: EvolutionParams, m: MixingParams) -> np.ndarray:
    """2x2 propagator U(t) on the flavor basis."""
    cols = [evolve_single(b, t, ev, m).vector for b in (K0, K0BAR)]
    return np.column_stack(cols)


def decay_matrix_is_psd(ev: EvolutionParams, m: MixingParams, tol: float = 1e-15) -> bool:
    """True when Gamma = i(H - H^dagger) is positive semidefinite.

    Only then is the norm of every evolved state non-increasing. With
    non-orthogonal K_S, K_L this needs |<K_S|K_L>| within the unitarity
    bound sqrt(gamma_S gamma_L) / |(gamma_S + gamma_L)/2 + i delta_m|.
    """
    k_s, k_l = mass_eigenstates(m)
    v = np.column_stack([k_s.vector, k_l.vector])
    h = v @ np.diag([ev.lambda_S, ev.lambda_L]) @ np.linalg.inv(v)
    gamma = 1j * (h - h.conj().T)
    return bool(np.linalg.eigvalsh((gamma + gamma.conj().T) / 2).min() >= -tol)


def projection_probability(s: FlavorState, target: FlavorState) -> float:
    """|<target|s>|^2 for a normalized target."""
    if not target.is_normalized():
        raise DomainError("projection target must be normalized")
    return abs(target.inner(s)) ** 2
