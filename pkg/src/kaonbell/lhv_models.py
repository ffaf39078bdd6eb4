"""Finite local hidden-variable models.

A model is a weighted list of hidden-variable values ``lambda`` and one
response table per side: ``responses[side][setting][k]`` is the outcome
of side ``side`` under ``setting`` when the hidden variable is
``lambdas[k]``. Side 1's table has no slot for side 2's setting, so the
models are local by construction.

The builders here make the loophole arguments concrete. They show that
such models are logically possible; they are not claims about the actual
electroweak dynamics.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError, ModelFormatError, UnknownSettingError
from .inequalities import NOTE_DETECTION, InequalityReport, ch_evaluate

NO_DETECT = "no-detect"
FEAS_TOL = 1e-9
MODEL_FORMAT = "kaonbell.lhv_model"
MODEL_VERSION = 1
DEMO_NOTE = (
    "constructed demonstration model: shows a local hidden-variable account is possible, "
    "not that it is physically realized"
)

Outcome = str
SettingsPair = tuple[str, str]
JointDist = dict[tuple[Outcome, Outcome], float]


@dataclass(frozen=True)
class HiddenVariableModel:
    lambdas: tuple[str, ...]
    weights: tuple[float, ...]
    responses: dict[int, dict[str, tuple[Outcome, ...]]]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.lambdas)
        if n == 0:
            raise DomainError("model needs at least one hidden-variable value")
        if len(self.weights) != n:
            raise DomainError("weights and lambdas differ in length")
        if any(w < 0 or not math.isfinite(w) for w in self.weights):
            raise DomainError("weights must be finite and non-negative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {math.fsum(self.weights)!r}, not 1")
        if set(self.responses) != {1, 2}:
            raise DomainError("responses must have exactly sides 1 and 2")
        for side, table in self.responses.items():
            if not table:
                raise DomainError(f"side {side} declares no settings")
            for setting, col in table.items():
                if len(col) != n:
                    raise DomainError(f"side {side} setting {setting!r}: response table is not total")

    def settings(self, side: int) -> list[str]:
        return list(self.responses[side])

    def response(self, side: int, setting: str) -> tuple[Outcome, ...]:
        try:
            return self.responses[side][setting]
        except KeyError:
            raise UnknownSettingError(f"side {side} has no setting {setting!r}") from None

    def to_json(self) -> dict[str, Any]:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "lambdas": list(self.lambdas),
            "weights": list(self.weights),
            "responses": {str(s): {k: list(v) for k, v in t.items()} for s, t in self.responses.items()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> HiddenVariableModel:
        try:
            if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
                raise ModelFormatError("not a kaonbell lhv model (format/version mismatch)")
            extra = set(doc) - {"format", "version", "lambdas", "weights", "responses", "metadata"}
            if extra:
                raise ModelFormatError(f"unknown keys {sorted(extra)}")
            responses = {}
            for side, table in doc["responses"].items():
                responses[int(side)] = {str(k): tuple(str(o) for o in v) for k, v in table.items()}
            return cls(
                lambdas=tuple(str(x) for x in doc["lambdas"]),
                weights=tuple(float(w) for w in doc["weights"]),
                responses=responses,
                metadata=dict(doc.get("metadata", {})),
            )
        except ModelFormatError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ModelFormatError(f"malformed model: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> HiddenVariableModel:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ModelFormatError(f"{path}: top level must be an object")
        return cls.from_json(doc)


@dataclass(frozen=True)
class EnsembleStatistics:
    settings_pair: SettingsPair
    full_joint: JointDist
    detected_joint: JointDist
    singles: dict[int, dict[Outcome, float]]
    detected_fraction: float

    def to_dict(self) -> dict[str, Any]:
        def dist(d):
            return [{"side1": a, "side2": b, "p": p} for (a, b), p in sorted(d.items())]

        return {
            "kind": "ensemble_statistics",
            "settings": list(self.settings_pair),
            "full_joint": dist(self.full_joint),
            "detected_joint": dist(self.detected_joint),
            "singles": {str(s): dict(sorted(v.items())) for s, v in self.singles.items()},
            "detected_fraction": self.detected_fraction,
        }


def _exact_joint(model: HiddenVariableModel, settings_pair: SettingsPair) -> dict[tuple[str, str], Fraction]:
    s1, s2 = settings_pair
    col1, col2 = model.response(1, s1), model.response(2, s2)
    acc: dict[tuple[str, str], Fraction] = {}
    for w, o1, o2 in zip(model.weights, col1, col2):
        acc[(o1, o2)] = acc.get((o1, o2), Fraction(0)) + Fraction(w)
    return acc


def statistics(model: HiddenVariableModel, settings_pair: SettingsPair) -> EnsembleStatistics:
    """Exact weighted aggregation over the hidden-variable ensemble."""
    exact = _exact_joint(model, tuple(settings_pair))
    total = sum(exact.values())
    full = {k: float(v / total) for k, v in exact.items()}
    singles: dict[int, dict[str, float]] = {1: {}, 2: {}}
    for side in (1, 2):
        acc: dict[str, Fraction] = {}
        for (o1, o2), v in exact.items():
            o = o1 if side == 1 else o2
            acc[o] = acc.get(o, Fraction(0)) + v
        singles[side] = {k: float(v / total) for k, v in acc.items()}
    det = {k: v for k, v in exact.items() if NO_DETECT not in k}
    det_mass = sum(det.values(), Fraction(0))
    detected = {k: float(v / det_mass) for k, v in det.items()} if det_mass > 0 else {}
    return EnsembleStatistics(
        settings_pair=tuple(settings_pair),
        full_joint=full,
        detected_joint=detected,
        singles=singles,
        detected_fraction=float(det_mass / total),
    )


def sample(
    model: HiddenVariableModel, settings_pair: SettingsPair, n: int, seed: int, chunk: int = 100_000
) -> dict[tuple[str, str], int]:
    """Draw n hidden-variable values and record the deterministic outcome pairs.

    Chunks of fixed size get seeds spawned from ``seed``; counts depend only
    on (model, settings, n, seed, chunk).
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    s1, s2 = settings_pair
    col1, col2 = model.response(1, s1), model.response(2, s2)
    w = np.asarray(model.weights, dtype=float)
    w = w / w.sum()
    n_chunks = -(-n // chunk)
    idx_counts = np.zeros(len(w), dtype=np.int64)
    for i, ss in enumerate(np.random.SeedSequence(seed).spawn(n_chunks)):
        size = min(chunk, n - i * chunk)
        idx_counts += np.random.default_rng(ss).multinomial(size, w)
    counts: Counter = Counter()
    for k, c in enumerate(idx_counts):
        if c:
            counts[(col1[k], col2[k])] += int(c)
    return dict(sorted(counts.items()))


# -- CH on models -------------------------------------------------------------

@dataclass(frozen=True)
class ChRoles:
    """Which settings play f1..f4, and which outcome counts as a detection."""

    f1: str
    f3: str
    f2: str
    f4: str
    counted: Outcome = "+"


def default_roles(model: HiddenVariableModel) -> ChRoles:
    meta = model.metadata.get("ch_roles")
    if meta:
        return ChRoles(**meta)
    a = model.settings(1)
    b = model.settings(2)
    if len(a) < 2 or len(b) < 2:
        raise UnknownSettingError("CH needs two settings per side")
    return ChRoles(f1=a[0], f3=a[1], f2=b[0], f4=b[1])


def ch_check_full_ensemble(model: HiddenVariableModel, roles: ChRoles | None = None) -> InequalityReport:
    """CH inequality on the whole ensemble (non-detections count as no-count).

    Probabilities are accumulated as exact rationals from the float weights,
    so the sign of the margin is exact.
    """
    r = roles or default_roles(model)
    c = r.counted

    def joint(sa, sb):
        return sum((v for (o1, o2), v in _exact_joint(model, (sa, sb)).items() if o1 == c and o2 == c), Fraction(0))

    p12, p14, p32, p34 = joint(r.f1, r.f2), joint(r.f1, r.f4), joint(r.f3, r.f2), joint(r.f3, r.f4)
    p3_ = sum((Fraction(w) for w, o in zip(model.weights, model.response(1, r.f3)) if o == c), Fraction(0))
    p_2 = sum((Fraction(w) for w, o in zip(model.weights, model.response(2, r.f2)) if o == c), Fraction(0))
    lhs, rhs = p12 - p14 + p32 + p34, p3_ + p_2
    inputs = {k: float(v) for k, v in dict(p12=p12, p14=p14, p32=p32, p34=p34, p3_=p3_, p_2=p_2).items()}
    return InequalityReport.compare(
        "clauser_horne_full_ensemble",
        float(lhs),
        float(rhs),
        margin=float(rhs - lhs),
        inputs_echo=inputs,
        assumption_notes=(DEMO_NOTE,),
        details={"roles": vars(r)},
    )


def ch_check_detected(model: HiddenVariableModel, roles: ChRoles | None = None) -> InequalityReport:
    """CH inequality on the coincidence (both-detected) subsample.

    Singles are the detected-subsample marginals: side 1 from (f3, f2),
    side 2 from (f1, f2).
    """
    r = roles or default_roles(model)
    c = r.counted

    def det(sa, sb):
        return statistics(model, (sa, sb)).detected_joint

    def pp(d):
        return d.get((c, c), 0.0)

    d12, d14, d32, d34 = det(r.f1, r.f2), det(r.f1, r.f4), det(r.f3, r.f2), det(r.f3, r.f4)
    p3_ = math.fsum(v for (o1, _), v in d32.items() if o1 == c)
    p_2 = math.fsum(v for (_, o2), v in d12.items() if o2 == c)
    rep = ch_evaluate(pp(d12), pp(d14), pp(d32), pp(d34), min(p3_, 1.0), min(p_2, 1.0),
                      notes=(NOTE_DETECTION, DEMO_NOTE))
    return InequalityReport(**{**vars(rep), "name": "clauser_horne_detected_subsample", "details": {"roles": vars(r)}})


# -- detection-loophole construction -----------------------------------------

@dataclass(frozen=True)
class InfeasibleResult:
    """Certificate that no model meets the request, with the best achievable value."""

    reason: str
    max_feasible_eta: float | None = None
    max_feasible_bias: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "infeasible", "feasible": False, "reason": self.reason,
                "max_feasible_eta": self.max_feasible_eta, "max_feasible_bias": self.max_feasible_bias}


def _scenario(target_joint: Mapping[SettingsPair, Mapping[tuple[str, str], float]]):
    a_set, b_set, a_out, b_out = [], [], [], []
    for (x, y), dist in target_joint.items():
        for seq, v in ((a_set, x), (b_set, y)):
            if v not in seq:
                seq.append(v)
        for (a, b) in dist:
            if a not in a_out:
                a_out.append(a)
            if b not in b_out:
                b_out.append(b)
    if NO_DETECT in a_out or NO_DETECT in b_out:
        raise DomainError("target distributions describe the detected sample only")
    return a_set, b_set, a_out, b_out


def _strategies(settings: list[str], outcomes: list[str]) -> list[tuple[str, ...]]:
    return list(itertools.product(outcomes + [NO_DETECT], repeat=len(settings)))


def _lossy_target(dist, eta: float, a_out, b_out) -> dict[tuple[str, str], float]:
    """Full outcome distribution of an experiment with independent losses eta."""
    full = {}
    ma = {a: math.fsum(dist.get((a, b), 0.0) for b in b_out) for a in a_out}
    mb = {b: math.fsum(dist.get((a, b), 0.0) for a in a_out) for b in b_out}
    for a in a_out:
        for b in b_out:
            full[(a, b)] = eta * eta * dist.get((a, b), 0.0)
        full[(a, NO_DETECT)] = eta * (1 - eta) * ma[a]
    for b in b_out:
        full[(NO_DETECT, b)] = eta * (1 - eta) * mb[b]
    full[(NO_DETECT, NO_DETECT)] = (1 - eta) ** 2
    return full


def _solve(target_joint, eta: float, loss: str):
    a_set, b_set, a_out, b_out = _scenario(target_joint)
    s1 = _strategies(a_set, a_out)
    s2 = _strategies(b_set, b_out)
    pairs = list(itertools.product(range(len(s1)), range(len(s2))))
    n = len(pairs)
    a_eq, b_eq = [], []
    n_dvars = len(target_joint) if loss == "free" else 0
    nv = n + n_dvars
    for j, ((x, y), dist) in enumerate(target_joint.items()):
        xi, yi = a_set.index(x), b_set.index(y)
        if loss == "independent":
            cells = _lossy_target(dist, eta, a_out, b_out)
        else:
            cells = {(a, b): dist.get((a, b), 0.0) for a in a_out for b in b_out}
        for (a, b), v in cells.items():
            row = np.zeros(nv)
            for k, (i1, i2) in enumerate(pairs):
                if s1[i1][xi] == a and s2[i2][yi] == b:
                    row[k] = 1.0
            if loss == "free":
                # coincidence cell = D_xy * target, D_xy free
                row[n + j] = -v
                a_eq.append(row)
                b_eq.append(0.0)
            else:
                a_eq.append(row)
                b_eq.append(v)
    row = np.zeros(nv)
    row[:n] = 1.0
    a_eq.append(row)
    b_eq.append(1.0)
    a_ub, b_ub = [], []
    if loss == "free":
        for side, sset, strat in ((0, a_set, s1), (1, b_set, s2)):
            for xi in range(len(sset)):
                row = np.zeros(nv)
                for k, pr in enumerate(pairs):
                    if strat[pr[side]][xi] != NO_DETECT:
                        row[k] = -1.0
                a_ub.append(row)
                b_ub.append(-eta)
    a_eq_m, b_eq_m = np.array(a_eq), np.array(b_eq)
    res = linprog(
        np.zeros(nv),
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=a_eq_m,
        b_eq=b_eq_m,
        bounds=[(0, None)] * nv,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        return None
    w = _polish(a_eq_m, b_eq_m, res.x)
    if w is None:
        return None
    return w[:n], pairs, s1, s2, a_set, b_set


def _polish(a_eq, b_eq, x):
    """Re-solve the equalities exactly on the LP support; None if that breaks feasibility."""
    x = np.where(x > 1e-13, x, 0.0)
    support = np.flatnonzero(x)
    sol, *_ = np.linalg.lstsq(a_eq[:, support], b_eq, rcond=None)
    if sol.min() < 0:
        sol = x[support]
    y = np.zeros_like(x)
    y[support] = sol
    if np.abs(a_eq @ y - b_eq).max() > FEAS_TOL:
        return None
    return y


def _to_model(sol, metadata) -> HiddenVariableModel:
    w, pairs, s1, s2, a_set, b_set = sol
    keep = [k for k in range(len(w)) if w[k] > 0]
    weights = np.array([w[k] for k in keep])
    weights = weights / math.fsum(weights)
    lambdas = tuple(
        "A[" + ",".join(s1[pairs[k][0]]) + "]B[" + ",".join(s2[pairs[k][1]]) + "]" for k in keep
    )
    responses = {
        1: {x: tuple(s1[pairs[k][0]][i] for k in keep) for i, x in enumerate(a_set)},
        2: {y: tuple(s2[pairs[k][1]][i] for k in keep) for i, y in enumerate(b_set)},
    }
    return HiddenVariableModel(lambdas, tuple(float(v) for v in weights), responses, metadata)


def _max_eta(target_joint, loss: str, tol: float = 1e-7) -> float | None:
    if _solve(target_joint, 1e-9 if loss == "free" else 0.0, loss) is None:
        return None
    lo, hi = 0.0, 1.0
    if _solve(target_joint, 1.0, loss) is not None:
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _solve(target_joint, mid, loss) is not None:
            lo = mid
        else:
            hi = mid
    return lo


def build_detection_loophole_model(
    target_joint: Mapping[SettingsPair, Mapping[tuple[str, str], float]],
    eta: float,
    loss: str = "independent",
    roles: ChRoles | None = None,
) -> HiddenVariableModel | InfeasibleResult:
    """Mixture of deterministic strategies whose detected subsample is ``target_joint``.

    ``loss="independent"`` (default) reproduces the whole record of an
    experiment with symmetric efficiency eta and independent losses:
    singles rate eta, coincidence rate eta^2. ``loss="free"`` only asks
    every setting on either side to be detected with probability >= eta,
    so losses may be correlated between the sides.

    Returns an InfeasibleResult (not an exception) when no model exists,
    carrying the largest feasible eta found by bisection.
    """
    if not (0.0 < eta <= 1.0):
        raise DomainError(f"eta must lie in (0, 1], got {eta!r}")
    if loss not in ("independent", "free"):
        raise DomainError(f"unknown loss model {loss!r}")
    for key, dist in target_joint.items():
        tot = math.fsum(dist.values())
        if abs(tot - 1.0) > 1e-12 or min(dist.values()) < 0:
            raise DomainError(f"target for settings {key} is not a normalized distribution")
    sol = _solve(target_joint, eta, loss)
    if sol is None:
        return InfeasibleResult(
            reason=f"no local model reproduces the target at eta={eta} ({loss} losses)",
            max_feasible_eta=_max_eta(target_joint, loss),
        )
    meta = {"construction": "detection_loophole", "eta": eta, "loss": loss, "note": DEMO_NOTE}
    if roles is not None:
        meta["ch_roles"] = vars(roles)
    return _to_model(sol, meta)


def singlet_target(settings_a: Sequence[float], settings_b: Sequence[float], names_a=("f1", "f3"), names_b=("f2", "f4")):
    """Detected-sample distributions of the antisymmetric pair for real-plane projectors.

    Outcome "+" projects on (cos a, sin a), "-" on the orthogonal vector.
    """
    from .entangled_pair import joint_projection_probability, make_pair
    from .kaon_core import FlavorState

    pair = make_pair()

    def basis(a):
        return {"+": FlavorState(math.cos(a), math.sin(a)), "-": FlavorState(-math.sin(a), math.cos(a))}

    target = {}
    for x, a in zip(names_a, settings_a):
        for y, b in zip(names_b, settings_b):
            ba, bb = basis(a), basis(b)
            target[(x, y)] = {(oa, ob): joint_projection_probability(pair, ba[oa], bb[ob]) for oa in "+-" for ob in "+-"}
    return target


# Settings (a1, a3) and (b2, b4) maximizing the CH expression on the pair state.
OPTIMAL_SINGLET_SETTINGS = ((0.0, math.pi / 4), (5 * math.pi / 8, -math.pi / 8))


# -- channel-dependent construction ------------------------------------------

MODES = ("semileptonic", "2pi0", "pi+pi-", "other")
_SL_LABEL = {"K0": "pi-l+nu", "K0bar": "pi+l-nubar"}


def time_buckets(n: int = 8, t_max: float = 10.0) -> np.ndarray:
    """Bucket edges: 0 followed by n log-spaced edges up to t_max."""
    return np.concatenate([[0.0], np.geomspace(t_max / 2 ** (n - 1), t_max, n)])


def _bucket_weights(edges: np.ndarray, rate: float) -> np.ndarray:
    w = np.exp(-rate * edges[:-1]) - np.exp(-rate * edges[1:])
    return w / w.sum()


def _channel_label(mode: str, tag: str) -> str:
    return _SL_LABEL[tag] if mode == "semileptonic" else mode


def build_channel_dependent_model(
    branching_targets: Mapping[str, float],
    delta_bias: float = 0.0,
    full_ratio: float = 1.0,
    n_buckets: int = 8,
    t_max: float = 10.0,
    decay_rate: float = 1.0,
) -> HiddenVariableModel | InfeasibleResult:
    """Model in which the hidden variable fixes decay mode, flavor tag and time bucket.

    Each hidden-variable value assigns side 1 a (mode, tag, bucket); side 2
    gets the opposite tag in the same mode and bucket. The |p|/|q| analogue
    is sqrt(N(K0)/N(K0bar)): on the full ensemble it is ``full_ratio``; on
    the semileptonic sub-ensemble, where the lepton charge reveals the tag,
    it is ``full_ratio + delta_bias``. Branching fractions per mode match
    ``branching_targets`` exactly.
    """
    extra = set(branching_targets) - set(MODES)
    if extra:
        raise DomainError(f"unknown decay modes {sorted(extra)}; expected {MODES}")
    b = {k: float(branching_targets.get(k, 0.0)) for k in MODES}
    if min(b.values()) < 0 or abs(math.fsum(b.values()) - 1.0) > 1e-12:
        raise DomainError("branching targets must be non-negative and sum to 1")
    if full_ratio <= 0:
        raise DomainError("full_ratio must be positive")

    def frac(r):
        return r * r / (1.0 + r * r)

    f_full = frac(full_ratio)
    r_sl = full_ratio + delta_bias
    b_sl = b["semileptonic"]
    b_rest = 1.0 - b_sl
    if r_sl <= 0:
        return InfeasibleResult("semileptonic ratio would be non-positive", max_feasible_bias=_max_bias(b_sl, full_ratio, delta_bias))
    f_sl = frac(r_sl)
    if b_sl == 0.0:
        if delta_bias != 0.0:
            return InfeasibleResult("no semileptonic sub-ensemble to bias", max_feasible_bias=0.0)
        f_rest = f_full
    elif b_rest <= 0.0:
        if abs(f_sl - f_full) > 1e-15:
            return InfeasibleResult("all decays are semileptonic; no room to hide a bias", max_feasible_bias=0.0)
        f_rest = f_full
    else:
        f_rest = (f_full - b_sl * f_sl) / b_rest
        if not (0.0 <= f_rest <= 1.0):
            return InfeasibleResult(
                f"bias {delta_bias} needs a K0 fraction {f_rest:.6g} outside [0, 1] in the other modes",
                max_feasible_bias=_max_bias(b_sl, full_ratio, delta_bias),
            )

    edges = time_buckets(n_buckets, t_max)
    bw = _bucket_weights(edges, decay_rate)
    lambdas, weights, side1, side2 = [], [], [], []
    for mode in MODES:
        if b[mode] == 0.0:
            continue
        f = f_sl if mode == "semileptonic" else f_rest
        for tag, tw in (("K0", f), ("K0bar", 1.0 - f)):
            if tw == 0.0:
                continue
            other = "K0bar" if tag == "K0" else "K0"
            for k, w in enumerate(bw):
                lambdas.append(f"{mode}|{tag}|t{k}")
                weights.append(b[mode] * tw * w)
                side1.append(f"{_channel_label(mode, tag)}@t{k}")
                side2.append(f"{_channel_label(mode, other)}@t{k}")
    total = math.fsum(weights)
    weights = [w / total for w in weights]
    meta = {
        "construction": "channel_dependent",
        "branching_targets": b,
        "delta_bias": delta_bias,
        "full_ratio": full_ratio,
        "bucket_edges": edges.tolist(),
        "note": DEMO_NOTE,
    }
    return HiddenVariableModel(
        tuple(lambdas), tuple(weights), {1: {"decay": tuple(side1)}, 2: {"decay": tuple(side2)}}, meta
    )


def _max_bias(b_sl: float, full_ratio: float, sign_of: float) -> float:
    """Largest |delta_bias| (in the requested direction) keeping the rest fractions in [0, 1]."""
    f_full = full_ratio ** 2 / (1 + full_ratio ** 2)
    if sign_of >= 0:
        f_sl = min(1.0, f_full / b_sl) if b_sl > 0 else f_full
    else:
        f_sl = max(0.0, (f_full - (1 - b_sl)) / b_sl) if b_sl > 0 else f_full
    if f_sl >= 1.0:
        return math.inf
    return math.sqrt(f_sl / (1 - f_sl)) - full_ratio


def mode_of(outcome: str) -> str:
    label = outcome.split("@", 1)[0]
    return "semileptonic" if label in _SL_LABEL.values() else label


def branching_fractions(model: HiddenVariableModel, side: int = 1) -> dict[str, float]:
    """Per-mode observed fractions on one side (lepton charge summed)."""
    acc: dict[str, Fraction] = {}
    setting = model.settings(side)[0]
    for w, o in zip(model.weights, model.response(side, setting)):
        m = mode_of(o)
        acc[m] = acc.get(m, Fraction(0)) + Fraction(w)
    tot = sum(acc.values())
    return {k: float(v / tot) for k, v in acc.items()}


def ratio_estimates(model: HiddenVariableModel) -> dict[str, float]:
    """|p|/|q| analogue on the full hidden ensemble and on the semileptonic sub-ensemble.

    The full-ensemble value reads the hidden flavor tag from the lambda
    labels; the semileptonic value uses only the observed lepton charge.
    """
    k0 = k0bar = Fraction(0)
    for lam, w in zip(model.lambdas, model.weights):
        tag = lam.split("|")[1]
        if tag == "K0":
            k0 += Fraction(w)
        else:
            k0bar += Fraction(w)
    plus = minus = Fraction(0)
    setting = model.settings(1)[0]
    for w, o in zip(model.weights, model.response(1, setting)):
        label = o.split("@", 1)[0]
        if label == _SL_LABEL["K0"]:
            plus += Fraction(w)
        elif label == _SL_LABEL["K0bar"]:
            minus += Fraction(w)
    out = {"full": math.sqrt(k0 / k0bar) if k0bar else math.inf}
    out["semileptonic"] = math.sqrt(plus / minus) if minus else (math.nan if not plus else math.inf)
    out["difference"] = out["semileptonic"] - out["full"]
    return out
