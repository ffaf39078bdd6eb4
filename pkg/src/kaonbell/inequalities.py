"""Clauser-Horne evaluation, the CP-parameter inequality chains, and
detection-efficiency thresholds.

Every report uses ``margin = rhs - lhs``; a negative margin is a violation
of the local-realist bound. Reduced inequalities (on eps, eps' or |p|, |q|)
always carry assumption notes: they are not assumption-free tests of
local realism.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .entangled_pair import joint_projection_probability, make_pair
from .errors import DomainError
from .kaon_core import K0, K0BAR, MixingParams, cp_eigenstates, mass_eigenstates

NOTE_SQM_AMPLITUDES = (
    "uses standard-QM amplitude relations, including amplitudes of the CP eigenstates "
    "K+/K-, which are not physical states once CP is violated; a local hidden-variable "
    "theory is only bound to reproduce observed rates"
)
NOTE_STOCHASTIC_INDEPENDENCE = (
    "assumes the decays of the two kaons are stochastically independent; a deterministic "
    "hidden-variable theory may fix the decay channel itself"
)
NOTE_UNCORRELATED_INPUT = (
    "parameter values measured on uncorrelated kaons need not equal those of entangled "
    "pairs, and such measurements are not space-like separated"
)
NOTE_PHASE_CONVENTION = "the reduction to a bound on eps fixes a CP phase convention"
NOTE_CHANNEL_BIAS = (
    "|p| and |q| extracted from particular decay channels need not describe an unbiased "
    "hidden-variable sample"
)
NOTE_NORMALIZATION = (
    "pair probabilities use the (|p|^2 + |q|^2) normalization; a square-root denominator "
    "would contradict P(K+, K0bar) = 1/4 and the eps -> 0 limit"
)
NOTE_CH_SIGNS = (
    "terms combined as P12 - P14 + P32 + P34 <= P3- + P-2, the Clauser-Horne arrangement "
    "with the 1-4 coincidence subtracted"
)
NOTE_DETECTION = (
    "a direct test on entangled pairs needs a fair-sampling assumption unless the detection "
    "efficiency exceeds 2(sqrt(2) - 1) ~ 0.8284"
)


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    margin: float
    violated: bool
    inputs_echo: dict[str, Any] = field(default_factory=dict)
    assumption_notes: tuple[str, ...] = ()
    details: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def compare(cls, name, lhs, rhs, *, margin=None, **kw) -> InequalityReport:
        lhs, rhs = float(lhs), float(rhs)
        margin = rhs - lhs if margin is None else float(margin)
        return cls(name=name, lhs=lhs, rhs=rhs, margin=margin, violated=margin < 0, **kw)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "inequality",
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "violated": self.violated,
            "inputs": _jsonable(self.inputs_echo),
            "assumption_notes": list(self.assumption_notes),
            "details": _jsonable(self.details),
        }


def _jsonable(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


# -- Clauser-Horne ----------------------------------------------------------

def ch_evaluate(p12, p14, p32, p34, p3_, p_2, *, notes: tuple[str, ...] = ()) -> InequalityReport:
    """P12 - P14 + P32 + P34 <= P3- + P-2.

    ``p3_`` is the side-1 single for setting 3 with no selection on side 2;
    ``p_2`` the side-2 single for setting 2.
    """
    vals = dict(p12=p12, p14=p14, p32=p32, p34=p34, p3_=p3_, p_2=p_2)
    for k, v in vals.items():
        v = float(v)
        if not (0.0 <= v <= 1.0):
            raise DomainError(f"{k}={v!r} is not a probability")
        vals[k] = v
    lhs = math.fsum([vals["p12"], -vals["p14"], vals["p32"], vals["p34"]])
    rhs = math.fsum([vals["p3_"], vals["p_2"]])
    return InequalityReport.compare(
        "clauser_horne", lhs, rhs, inputs_echo=vals, assumption_notes=(NOTE_CH_SIGNS, *notes)
    )


# -- eps' chain -------------------------------------------------------------

def epsilon_prime_test(eps_prime: complex) -> InequalityReport:
    """|Re eps'| <= 3 |eps'|^2."""
    eps_prime = complex(eps_prime)
    return InequalityReport.compare(
        "epsilon_prime",
        abs(eps_prime.real),
        3.0 * abs(eps_prime) ** 2,
        inputs_echo={"eps_prime": eps_prime},
        assumption_notes=(NOTE_STOCHASTIC_INDEPENDENCE, NOTE_SQM_AMPLITUDES, NOTE_UNCORRELATED_INPUT),
    )


# -- BGH chain ----------------------------------------------------------------

def bgh_probabilities(m: MixingParams) -> tuple[float, float, float]:
    """(P(K_S, K0bar), P(K_S, K0bar_+), P(K_+, K0bar)) on the pair state.

    The second slot is the CP-even state on side 2.
    """
    n2 = m.norm2
    p_s_k0bar = abs(m.p) ** 2 / (2.0 * n2)
    p_s_kplus = abs(m.p * cmath.exp(1j * m.alpha) - m.q) ** 2 / (4.0 * n2)
    return p_s_k0bar, p_s_kplus, 0.25


def bgh_probabilities_swapped(m: MixingParams) -> tuple[float, float, float]:
    """Same three terms with K0bar replaced by K0."""
    n2 = m.norm2
    p_s_k0 = abs(m.q) ** 2 / (2.0 * n2)
    p_s_kplus = abs(m.p * cmath.exp(1j * m.alpha) - m.q) ** 2 / (4.0 * n2)
    return p_s_k0, p_s_kplus, 0.25


def bgh_projection_probabilities(m: MixingParams, swap_flavor: bool = False) -> tuple[float, float, float]:
    """The BGH terms computed directly as projections on the pair state."""
    pair = make_pair(m)
    k_s, _ = mass_eigenstates(m)
    k_plus, _ = cp_eigenstates(m.alpha)
    flavor = K0 if swap_flavor else K0BAR
    return (
        joint_projection_probability(pair, k_s, flavor),
        joint_projection_probability(pair, k_s, k_plus),
        joint_projection_probability(pair, k_plus, flavor),
    )


def bgh_test(m: MixingParams, swap_flavor: bool = False) -> InequalityReport:
    """Reduced BGH inequality |p| <= |q| (or |q| <= |p| when swapped).

    ``details`` carries the probability-level inequality at the stored
    alpha, the phase-dependent form Re(e^{i alpha} p conj(q)) <= |q|^2, and
    the probability-level margin at the alpha maximizing the left side.
    """
    p, q = m.p, m.q
    big, small = (abs(q), abs(p)) if swap_flavor else (abs(p), abs(q))
    bound_sq = abs(p) ** 2 if swap_flavor else abs(q) ** 2
    probs_fn = bgh_probabilities_swapped if swap_flavor else bgh_probabilities

    a, b, c = probs_fn(m)
    cross = cmath.exp(1j * m.alpha) * p * q.conjugate()
    alpha_star = -cmath.phase(p * q.conjugate())
    a2, b2, c2 = probs_fn(MixingParams(m.epsilon, alpha_star))
    details = {
        "probabilities": {"lhs": a, "rhs_terms": [b, c], "margin": (b + c) - a},
        "phase_form": {"lhs": cross.real, "rhs": bound_sq, "margin": bound_sq - cross.real},
        "alpha_max": alpha_star,
        "probabilities_at_alpha_max": {"lhs": a2, "rhs_terms": [b2, c2], "margin": (b2 + c2) - a2},
    }
    return InequalityReport.compare(
        "bgh_swapped" if swap_flavor else "bgh",
        big,
        small,
        inputs_echo={"epsilon": m.epsilon, "alpha": m.alpha, "swap_flavor": swap_flavor},
        assumption_notes=(NOTE_SQM_AMPLITUDES, NOTE_NORMALIZATION, NOTE_CHANNEL_BIAS, NOTE_UNCORRELATED_INPUT),
        details=details,
    )


def bgh_contradiction(m: MixingParams) -> dict[str, Any]:
    """Run the direct and swapped BGH tests together.

    Both hold only if |p| = |q|; any |p| != |q| violates one of them.
    """
    direct = bgh_test(m, swap_flavor=False)
    swapped = bgh_test(m, swap_flavor=True)
    return {
        "direct": direct,
        "swapped": swapped,
        "p_minus_q": abs(m.p) - abs(m.q),
        "both_hold": not (direct.violated or swapped.violated),
    }


# -- eps chain ------------------------------------------------------------

def epsilon_test(eps: complex) -> InequalityReport:
    """Re eps <= |eps|^2."""
    eps = complex(eps)
    lhs, rhs = eps.real, abs(eps) ** 2
    details = {"ratio": lhs / rhs} if rhs > 0 else {}
    return InequalityReport.compare(
        "epsilon",
        lhs,
        rhs,
        inputs_echo={"eps": eps},
        assumption_notes=(NOTE_PHASE_CONVENTION, NOTE_SQM_AMPLITUDES, NOTE_UNCORRELATED_INPUT),
        details=details,
    )


# -- detection-efficiency thresholds --------------------------------------

GRID_POINTS = 32
ANGLE_TOL = 1e-6
ETA_TOL = 1e-5
_SEEDS_PER_ETA = 4


@dataclass(frozen=True)
class EfficiencyScanResult:
    state_angle: float
    optimal_settings: tuple[float, float, float, float]
    threshold_eta: float
    ch_value_at_eta: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "efficiency_threshold",
            "state_angle": self.state_angle,
            "optimal_settings": list(self.optimal_settings),
            "threshold_eta": self.threshold_eta,
            "ch_value_at_eta": self.ch_value_at_eta,
        }


def ch_terms(settings, state_angle: float) -> tuple[float, float]:
    """(J, S) for cos(th)|00> + sin(th)|11> with real-plane projectors.

    Settings are (a1, a3, b2, b4): side 1 uses a1, a3 and side 2 b2, b4.
    J = P12 - P14 + P32 + P34 and S = P3- + P-2 at unit efficiency.
    """
    a1, a3, b2, b4 = settings
    c, s = math.cos(state_angle), math.sin(state_angle)

    def joint(a, b):
        return (c * math.cos(a) * math.cos(b) + s * math.sin(a) * math.sin(b)) ** 2

    def single(a):
        return (c * math.cos(a)) ** 2 + (s * math.sin(a)) ** 2

    j = joint(a1, b2) - joint(a1, b4) + joint(a3, b2) + joint(a3, b4)
    return j, single(a3) + single(b2)


def ch_value(eta: float, settings, state_angle: float) -> float:
    """lhs - rhs of the CH inequality with symmetric detection efficiency eta.

    Undetected particles count as no-count, so joints scale with eta^2 and
    singles with eta.
    """
    j, s = ch_terms(settings, state_angle)
    return eta * eta * j - eta * s


def _grid_terms(state_angle: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ang = np.arange(GRID_POINTS) * (math.pi / GRID_POINTS)
    c, s = math.cos(state_angle), math.sin(state_angle)
    ca, sa = np.cos(ang), np.sin(ang)
    joint = (c * np.outer(ca, ca) + s * np.outer(sa, sa)) ** 2  # joint[a, b]
    single = c * c * ca ** 2 + s * s * sa ** 2
    # axes: a1, a3, b2, b4
    j = (joint[:, None, :, None] - joint[:, None, None, :]
         + joint[None, :, :, None] + joint[None, :, None, :])
    sm = single[None, :, None, None] + single[None, None, :, None]
    return ang, j, sm


def _refine(f, x0, step: float, tol: float = ANGLE_TOL):
    """Coordinate pattern search maximizing f, halving the step to tol."""
    x = list(x0)
    fx = f(x)
    while step >= tol:
        improved = False
        for i in range(len(x)):
            for sgn in (1.0, -1.0):
                y = list(x)
                y[i] += sgn * step
                fy = f(y)
                if fy > fx:
                    x, fx, improved = y, fy, True
                    break
        if not improved:
            step /= 2
    return fx, x


def _max_ch(eta, state_angle, grid, extra_seeds=()):
    ang, j, sm = grid
    vals = (eta * eta * j - eta * sm).ravel()
    k = _SEEDS_PER_ETA
    top = np.argpartition(-vals, k)[:k]
    top = sorted(top.tolist(), key=lambda i: (-vals[i], i))
    seeds = [[ang[ix] for ix in np.unravel_index(i, j.shape)] for i in top]
    seeds.extend(list(s) for s in extra_seeds)

    def f(x):
        return ch_value(eta, x, state_angle)

    best = None
    for seed in seeds:
        res = _refine(f, seed, math.pi / GRID_POINTS)
        if best is None or res[0] > best[0]:
            best = res
    return best


def efficiency_threshold(state_angle: float, eta_tol: float = ETA_TOL) -> EfficiencyScanResult:
    """Smallest symmetric efficiency at which the CH inequality can be violated.

    For each trial eta the four settings are optimized (grid, then pattern
    search); eta is bisected on the sign of the optimized CH value.
    """
    if not (0.0 < state_angle <= math.pi / 4 + 1e-15):
        raise DomainError(f"state_angle must lie in (0, pi/4], got {state_angle!r}")
    grid = _grid_terms(state_angle)
    v_hi, x_hi = _max_ch(1.0, state_angle, grid)
    if v_hi <= 0:
        raise DomainError(f"no CH violation found at unit efficiency for state_angle={state_angle!r}")
    lo, hi = 0.5, 1.0
    while hi - lo > eta_tol:
        mid = 0.5 * (lo + hi)
        v, x = _max_ch(mid, state_angle, grid, extra_seeds=[x_hi])
        if v > 0:
            hi, v_hi, x_hi = mid, v, x
        else:
            lo = mid
    settings = tuple(float(math.remainder(a, math.pi)) for a in x_hi)
    return EfficiencyScanResult(
        state_angle=float(state_angle),
        optimal_settings=settings,
        threshold_eta=hi,
        ch_value_at_eta=v_hi,
    )


def efficiency_scan(angles) -> list[EfficiencyScanResult]:
    angles = list(angles)
    if not angles:
        raise DomainError("empty angle grid")
    return [efficiency_threshold(a) for a in angles]
