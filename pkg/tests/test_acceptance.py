"""Acceptance gate: one test per criterion at its stated tolerance.

Each test prints a PASS/FAIL line (also collected into the terminal summary).
"""

import cmath
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from kaonbell.cli import run
from kaonbell.entangled_pair import (
    PI00,
    PIPM,
    SUPPORTED_PAIRS,
    joint_decay_probability,
    joint_projection_probability,
    make_pair,
    r_params_from_eps,
)
from kaonbell.inequalities import (
    bgh_contradiction,
    bgh_probabilities,
    bgh_test,
    efficiency_scan,
    efficiency_threshold,
    epsilon_prime_test,
    epsilon_test,
)
from kaonbell.kaon_core import EvolutionParams, FlavorState, MixingParams
from kaonbell.lhv_models import (
    NO_DETECT,
    OPTIMAL_SINGLET_SETTINGS,
    ChRoles,
    HiddenVariableModel,
    build_detection_loophole_model,
    ch_check_detected,
    ch_check_full_ensemble,
    singlet_target,
)

from .oracles import kron_probability

EPS = cmath.rect(2.284e-3, math.radians(43.52))
LOG: list[str] = []


@contextmanager
def criterion(number, title, budget_s):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        dt = time.perf_counter() - t0
        ok = ok and dt < budget_s
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title} ({dt * 1e3:.3f} ms, budget {budget_s * 1e3:g} ms)"
        LOG.append(line)
        print(line)
    assert dt < budget_s, f"runtime {dt:.3f} s over budget {budget_s} s"


def test_criterion_1_epsilon():
    with criterion(1, "eps inequality at the measured eps", 0.001):
        r = epsilon_test(EPS)
        assert r.lhs == pytest.approx(1.656e-3, abs=1e-6)
        assert r.rhs == pytest.approx(5.217e-6, abs=1e-6)
        assert r.violated
        assert 300 <= r.lhs / r.rhs <= 330


def test_criterion_2_bgh_chain():
    oracle = abs(1 + EPS) - abs(1 - EPS)
    with criterion(2, "BGH chain |p| > |q| and contradiction", 0.001):
        m = MixingParams(EPS)
        r = bgh_test(m)
        assert r.lhs > r.rhs and r.violated
        assert r.lhs - r.rhs == pytest.approx(3.312e-3, abs=1e-5)
        assert r.lhs - r.rhs == pytest.approx(oracle, abs=1e-12)
        res = bgh_contradiction(m)
        assert not res["swapped"].violated
        assert not res["both_hold"]


def test_criterion_3_bgh_probabilities():
    rng = np.random.default_rng(20240603)
    samples = [(cmath.rect(rng.uniform(0, 0.05), rng.uniform(-math.pi, math.pi)), rng.uniform(-math.pi, math.pi))
               for _ in range(1000)]
    k0bar = np.array([0, 1])
    with criterion(3, "BGH probabilities equal projections; (1/4, 0, 1/4) at eps = 0", 1.0):
        worst = 0.0
        for eps, alpha in samples:
            m = MixingParams(eps, alpha)
            n = math.sqrt(abs(m.p) ** 2 + abs(m.q) ** 2)
            k_s = np.array([m.p, -m.q]) / n
            k_plus = np.array([1, -cmath.exp(1j * alpha)]) / math.sqrt(2)
            expected = (kron_probability(k_s, k0bar), kron_probability(k_s, k_plus), kron_probability(k_plus, k0bar))
            worst = max(worst, max(abs(a - b) for a, b in zip(bgh_probabilities(m), expected)))
        assert worst <= 1e-12
        a, b, c = bgh_probabilities(MixingParams(0))
        assert (a, c) == (0.25, 0.25)
        assert b == 0.0


def test_criterion_4_epsilon_prime():
    with criterion(4, "eps' inequality and its boundaries", 0.001):
        r = epsilon_prime_test(3.8e-6)
        assert r.violated and r.rhs / r.lhs < 1e-4
        assert not epsilon_prime_test(0).violated
        assert not epsilon_prime_test(2e-6j).violated


def test_criterion_5_efficiency_thresholds():
    with criterion(5, "efficiency thresholds 0.8284 at pi/4, infimum <= 0.672", 30.0):
        top = efficiency_threshold(math.pi / 4)
        assert top.threshold_eta == pytest.approx(0.8284, abs=1e-3)
        scan = efficiency_scan([math.pi / 8, 0.2, 0.1, 0.05, 0.02])
        etas = [top.threshold_eta] + [s.threshold_eta for s in scan]
        assert all(b <= a + 1e-5 for a, b in zip(etas, etas[1:]))
        assert min(etas) <= 0.672


def _random_model(rng):
    n = int(rng.integers(1, 30))
    w = rng.dirichlet(np.ones(n))
    resp = {side: {s: tuple(rng.choice(("+", "-", NO_DETECT), n)) for s in names}
            for side, names in ((1, ("f1", "f3")), (2, ("f2", "f4")))}
    return HiddenVariableModel(tuple(f"l{i}" for i in range(n)), tuple(float(x) for x in w / w.sum()), resp)


def test_criterion_6_lhv_soundness():
    roles = ChRoles("f1", "f3", "f2", "f4")
    with criterion(6, "1000 random LHV models satisfy CH; eta = 0.80 loophole model violates it", 60.0):
        rng = np.random.default_rng(6)
        violations = sum(ch_check_full_ensemble(_random_model(rng), roles).violated for _ in range(1000))
        assert violations == 0
        model = build_detection_loophole_model(singlet_target(*OPTIMAL_SINGLET_SETTINGS), 0.80, roles=roles)
        assert isinstance(model, HiddenVariableModel)
        assert ch_check_detected(model).violated
        assert not ch_check_full_ensemble(model).violated


def test_criterion_7_decay_properties():
    ev = EvolutionParams(1.0, 1.75e-3, 0.474)
    rng = np.random.default_rng(7)
    states = [FlavorState(*(rng.normal(size=2) + 1j * rng.normal(size=2))).normalized() for _ in range(200)]
    with criterion(7, "antisymmetry zeros, eps' = 0 identity, exponential factorization", 1.0):
        pair = make_pair(MixingParams(EPS))
        assert max(joint_projection_probability(pair, f, f) for f in states) <= 1e-12
        no_prime = r_params_from_eps(EPS, 0, EPS)
        grid = np.linspace(0, 10, 20)
        assert all(joint_decay_probability(PI00, PIPM, t, no_prime, ev) == 0 for t in grid)
        d = r_params_from_eps(EPS, 1.7e-3 * cmath.exp(0.8j), 0.5 * EPS, x=1e-3)
        for pair_ in SUPPORTED_PAIRS:
            p0 = joint_decay_probability(*pair_, 0.0, d, ev)
            for t in grid:
                expected = p0 * math.exp(-(ev.gamma_L + ev.gamma_S) * t)
                assert abs(joint_decay_probability(*pair_, t, d, ev) - expected) <= 1e-12


def test_criterion_8_determinism(tmp_path, capsys):
    model = tmp_path / "model.json"
    assert run(["lhv", "build-detection", "--eta", "0.8", "--model", str(model)]) == 0
    with criterion(8, "lhv simulate is byte-identical for equal seeds under --reproducible", 60.0):
        outs = []
        dest = tmp_path / "run.json"
        for _ in range(2):
            assert run(["lhv", "simulate", "--model", str(model), "--seed", "42", "--reproducible",
                        "--out", str(dest)]) == 0
            outs.append(dest.read_bytes())
        assert outs[0] == outs[1] and len(outs[0]) > 0
        run(["lhv", "simulate", "--model", str(model), "--seed", "43", "--reproducible", "--out", str(dest)])
        assert dest.read_bytes() != outs[0]
    capsys.readouterr()
