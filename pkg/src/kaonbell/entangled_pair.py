"""The antisymmetric two-kaon state and its joint probabilities.

Two families of joint probabilities live here:

* projection probabilities ``|(<f1| x <f2|) |pair>|^2`` on arbitrary
  single-kaon states, and
* equal-time decay-channel probabilities written in terms of the decay
  amplitude ratios r_00, r_+-, the Delta S = Delta Q parameter x and the
  widths gamma_S, gamma_L.

The decay formulas are standard-QM expressions; a general local
hidden-variable theory need not reproduce them for unobserved quantities.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnphysicalParameterError, UnsupportedCombinationError
from .kaon_core import (
    NORM_TOL,
    EvolutionParams,
    FlavorState,
    MixingParams,
    evolution_matrix,
    mass_eigenstates,
)

PROB_TOL = 1e-12


class ChannelId(str, enum.Enum):
    SEMILEPTONIC_PLUS = "pi-l+nu"
    SEMILEPTONIC_MINUS = "pi+l-nubar"
    TWO_PI_ZERO = "2pi0"
    PI_PLUS_PI_MINUS = "pi+pi-"
    OTHER = "other"
    NONE = "none"


SL_PLUS = ChannelId.SEMILEPTONIC_PLUS
SL_MINUS = ChannelId.SEMILEPTONIC_MINUS
PI00 = ChannelId.TWO_PI_ZERO
PIPM = ChannelId.PI_PLUS_PI_MINUS

DEFAULT_PARTITION: tuple[ChannelId, ...] = (PI00, PIPM, SL_PLUS, SL_MINUS, ChannelId.OTHER)

# The three channel pairs with explicit equal-time formulas, in stated order.
SUPPORTED_PAIRS: tuple[tuple[ChannelId, ChannelId], ...] = (
    (SL_PLUS, PI00),
    (SL_PLUS, PIPM),
    (PI00, PIPM),
)


@dataclass(frozen=True)
class PairState:
    """Amplitude tensor ``amp[i, j]`` on {K0, K0bar} x {K0, K0bar}."""

    amp: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amp, dtype=complex)
        if a.shape != (2, 2):
            raise DomainError(f"pair amplitude must be 2x2, got shape {a.shape}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "amp", a)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amp) ** 2))

    def swapped(self) -> PairState:
        """Exchange the two particles."""
        return PairState(self.amp.T)

    def on_basis(self, b1: tuple[FlavorState, FlavorState], b2: tuple[FlavorState, FlavorState]) -> np.ndarray:
        """Expansion coefficients on a (not necessarily orthogonal) product basis."""
        m1 = np.column_stack([s.vector for s in b1])
        m2 = np.column_stack([s.vector for s in b2])
        return np.linalg.solve(m1, np.linalg.solve(m2, self.amp.T).T)


def make_pair(m: MixingParams | None = None) -> PairState:
    """(|K0>|K0bar> - |K0bar>|K0>)/sqrt(2).

    The flavor form does not depend on the mixing; ``m`` is accepted so the
    mass-basis re-expression can be checked against the same parameters.
    """
    r = 1.0 / math.sqrt(2.0)
    return PairState(np.array([[0.0, r], [-r, 0.0]], dtype=complex))


def mass_basis_amplitudes(pair: PairState, m: MixingParams) -> np.ndarray:
    """Coefficients on {K_S, K_L} x {K_S, K_L}."""
    k_s, k_l = mass_eigenstates(m)
    return pair.on_basis((k_s, k_l), (k_s, k_l))


def evolve_pair(pair: PairState, t1: float, t2: float, ev: EvolutionParams, m: MixingParams) -> PairState:
    """Apply U(t1) to particle 1 and U(t2) to particle 2."""
    u1 = evolution_matrix(t1, ev, m)
    u2 = evolution_matrix(t2, ev, m)
    return PairState(u1 @ pair.amp @ u2.T)


def joint_projection_probability(pair: PairState, f1: FlavorState, f2: FlavorState) -> float:
    if not (f1.is_normalized() and f2.is_normalized()):
        raise DomainError("projection states must be normalized")
    amp = f1.vector.conj() @ pair.amp @ f2.vector.conj()
    return float(abs(amp) ** 2)


@dataclass(frozen=True)
class DecayChannelParams:
    r_00: complex
    r_plusminus: complex
    x: complex = 0j
    eps_L: complex = 0j
    eps: complex = 0j
    eps_prime: complex = 0j


def r_params_from_eps(eps: complex, eps_prime: complex, eps_L: complex, x: complex = 0j) -> DecayChannelParams:
    eps, eps_prime, eps_L = complex(eps), complex(eps_prime), complex(eps_L)
    return DecayChannelParams(
        r_00=eps - eps_L - 2 * eps_prime,
        r_plusminus=eps - eps_L + eps_prime,
        x=complex(x),
        eps_L=eps_L,
        eps=eps,
        eps_prime=eps_prime,
    )


def cp_conjugate(d: DecayChannelParams) -> DecayChannelParams:
    """Parameters seen after relabelling K0 <-> K0bar.

    All CP-odd quantities flip sign. Used to obtain pi+ l- nubar joints from
    the pi- l+ nu formulas.
    """
    return DecayChannelParams(
        r_00=-d.r_00, r_plusminus=-d.r_plusminus, x=-d.x,
        eps_L=-d.eps_L, eps=-d.eps, eps_prime=-d.eps_prime,
    )


def _check_time(t: float) -> None:
    if t < 0 or not math.isfinite(t):
        raise DomainError(f"t must be finite and >= 0, got {t!r}")


def _checked(value: float) -> float:
    if value < -PROB_TOL or value > 1.0 + PROB_TOL:
        raise UnphysicalParameterError(f"probability {value!r} outside [0, 1]")
    return value


def _formula(c1: ChannelId, c2: ChannelId, t: float, d: DecayChannelParams, ev: EvolutionParams) -> float:
    damp = math.exp(-(ev.gamma_L + ev.gamma_S) * t)
    if (c1, c2) == (SL_PLUS, PI00):
        return 0.25 * damp * (1.0 - 2.0 * d.r_00.real - 2.0 * d.x.real)
    if (c1, c2) == (SL_PLUS, PIPM):
        # the damping must be real, so gamma_L (not the complex lambda_L) enters here too
        return 0.25 * damp * (1.0 - 2.0 * d.r_plusminus.real - 2.0 * d.x.real)
    if (c1, c2) == (PI00, PIPM):
        return 0.5 * damp * abs(d.r_plusminus - d.r_00) ** 2
    raise UnsupportedCombinationError(f"no joint formula for ({c1.value}, {c2.value})")


def joint_decay_probability(
    c1: ChannelId, c2: ChannelId, t: float, d: DecayChannelParams, ev: EvolutionParams
) -> float:
    """Equal-time joint decay probability for one of the three formula pairs."""
    c1, c2 = ChannelId(c1), ChannelId(c2)
    _check_time(t)
    if (c1, c2) not in SUPPORTED_PAIRS:
        raise UnsupportedCombinationError(
            f"({c1.value}, {c2.value}) is not one of "
            + ", ".join(f"({a.value}, {b.value})" for a, b in SUPPORTED_PAIRS)
        )
    return _checked(_formula(c1, c2, t, d, ev))


def equal_time_joint(
    c1: ChannelId, c2: ChannelId, t: float, d: DecayChannelParams, ev: EvolutionParams
) -> float:
    """Joint decay probability extended by symmetry.

    Beyond the three formula pairs this uses: exchange symmetry at equal
    times, vanishing of identical channels (antisymmetric state), and
    K0 <-> K0bar relabelling for pi+ l- nubar. Pairs it cannot reach raise
    UnsupportedCombinationError.
    """
    c1, c2 = ChannelId(c1), ChannelId(c2)
    _check_time(t)
    if c1 == c2 and c1 not in (ChannelId.OTHER, ChannelId.NONE):
        return 0.0
    if (c1, c2) in SUPPORTED_PAIRS:
        return _checked(_formula(c1, c2, t, d, ev))
    if (c2, c1) in SUPPORTED_PAIRS:
        return _checked(_formula(c2, c1, t, d, ev))
    if SL_MINUS in (c1, c2) and SL_PLUS not in (c1, c2):
        a, b = (SL_PLUS if c == SL_MINUS else c for c in (c1, c2))
        return equal_time_joint(a, b, t, cp_conjugate(d), ev)
    raise UnsupportedCombinationError(f"no joint formula for ({c1.value}, {c2.value})")


def pair_survival(t: float, ev: EvolutionParams) -> float:
    """Probability that neither kaon has decayed by equal time t.

    For the antisymmetric state (U x U)|psi> = det(U)|psi>, and
    |det U|^2 = exp(-(gamma_S + gamma_L) t).
    """
    _check_time(t)
    return math.exp(-(ev.gamma_S + ev.gamma_L) * t)


def singles_probability(
    c: ChannelId,
    t: float,
    d: DecayChannelParams,
    ev: EvolutionParams,
    partition: Iterable[ChannelId] = DEFAULT_PARTITION,
    overrides: Mapping[ChannelId, float] | None = None,
) -> float:
    """Marginal of channel ``c`` with no selection on the other side.

    Sums the equal-time joints over ``partition`` on the unselected side.
    Partition cells without a formula (``OTHER``, or pairs the symmetry
    extension cannot reach) take their joint value from ``overrides``;
    a missing override for such a cell raises UnsupportedCombinationError.
    ``c = NONE`` means no selection on either side and returns the pair
    survival probability.
    """
    c = ChannelId(c)
    _check_time(t)
    if c == ChannelId.NONE:
        return pair_survival(t, ev)
    overrides = {ChannelId(k): float(v) for k, v in (overrides or {}).items()}
    terms = []
    for c2 in partition:
        c2 = ChannelId(c2)
        if c2 in overrides:
            terms.append(overrides[c2])
        elif c2 == ChannelId.OTHER:
            raise UnsupportedCombinationError("partition cell 'other' needs an override value")
        else:
            terms.append(equal_time_joint(c, c2, t, d, ev))
    return _checked(math.fsum(terms))


def joint_cells(t: float, d: DecayChannelParams, ev: EvolutionParams) -> dict[str, float]:
    """The three formula probabilities plus the remainder cell, as a distribution."""
    cells = {f"{a.value}|{b.value}": joint_decay_probability(a, b, t, d, ev) for a, b in SUPPORTED_PAIRS}
    rest = 1.0 - math.fsum(cells.values())
    if rest < -PROB_TOL:
        raise UnphysicalParameterError("formula probabilities sum above 1")
    cells["rest"] = max(rest, 0.0)
    return cells


def sample_cells(
    cells: Mapping[str, float], n: int, seed: int, chunk: int = 100_000
) -> dict[str, int]:
    """Multinomial sampling of a categorical distribution.

    Draws in fixed-size chunks with per-chunk seeds spawned from ``seed``,
    so the counts depend only on (cells, n, seed, chunk) and not on how
    chunks are scheduled.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    labels = list(cells)
    probs = np.array([cells[k] for k in labels], dtype=float)
    probs = probs / probs.sum()
    n_chunks = -(-n // chunk)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    counts = np.zeros(len(labels), dtype=np.int64)
    for i, ss in enumerate(seqs):
        size = min(chunk, n - i * chunk)
        counts += np.random.default_rng(ss).multinomial(size, probs)
    return {k: int(v) for k, v in zip(labels, counts)}


def is_antisymmetric(pair: PairState, tol: float = NORM_TOL) -> bool:
    return bool(np.allclose(pair.amp, -pair.amp.T, atol=tol, rtol=0.0))
