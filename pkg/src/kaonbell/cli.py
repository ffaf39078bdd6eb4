"""Command-line front end.

Exit codes: 0 completed (violations and infeasible builds are results),
2 usage or configuration error, 3 I/O error or malformed input file.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

from . import __version__
from .config import MonteCarlo, Output, RunConfig, load_config
from .entangled_pair import (
    SUPPORTED_PAIRS,
    ChannelId,
    evolve_pair,
    joint_decay_probability,
    joint_projection_probability,
    make_pair,
)
from .errors import ConfigError, DomainError, KaonBellError, ModelFormatError, UnsupportedCombinationError
from .inequalities import (
    NOTE_DETECTION,
    NOTE_SQM_AMPLITUDES,
    bgh_contradiction,
    ch_evaluate,
    efficiency_scan,
    epsilon_prime_test,
    epsilon_test,
)
from .kaon_core import K0, K0BAR, FlavorState, cp_eigenstates, mass_eigenstates
from .lhv_models import (
    OPTIMAL_SINGLET_SETTINGS,
    ChRoles,
    HiddenVariableModel,
    InfeasibleResult,
    branching_fractions,
    build_channel_dependent_model,
    build_detection_loophole_model,
    ch_check_detected,
    ch_check_full_ensemble,
    ratio_estimates,
    sample,
    singlet_target,
    statistics,
)
from .report import ReportDocument, to_csv

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3

INEQ_HEADER = ["name", "lhs", "rhs", "margin", "violated"]


class UsageError(KaonBellError):
    pass


# -- parsing helpers ------------------------------------------------------

def parse_angle(tok: str) -> float:
    """A float, or a multiple/fraction of pi such as 'pi/4' or '3pi/8'."""
    tok = tok.strip().replace(" ", "")
    m = re.fullmatch(r"([0-9.eE+-]*)\*?pi(?:/([0-9.eE+-]+))?", tok)
    try:
        if m:
            k = float(m.group(1)) if m.group(1) not in ("", "+") else (-1.0 if m.group(1) == "-" else 1.0)
            return k * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
        return float(tok)
    except ValueError:
        raise UsageError(f"cannot parse angle {tok!r}") from None


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def parse_times(text: str) -> list[float]:
    """Comma list, or 'start:stop:n' for n evenly spaced points."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"time grid must be start:stop:n, got {text!r}")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"bad time grid {text!r}") from None
        if n < 1:
            raise UsageError("time grid needs n >= 1")
        return [a + (b - a) * i / (n - 1) for i in range(n)] if n > 1 else [a]
    return parse_float_list(text)


STATE_NAMES = ("K0", "K0bar", "KS", "KL", "K+", "K-")


def _state(name: str, cfg: RunConfig) -> FlavorState:
    m = cfg.mixing()
    k_s, k_l = mass_eigenstates(m)
    k_p, k_m = cp_eigenstates(m.alpha)
    table = {"K0": K0, "K0bar": K0BAR, "KS": k_s, "KL": k_l, "K+": k_p, "K-": k_m}
    return table[name]


def _channel(name: str) -> ChannelId:
    try:
        return ChannelId(name)
    except ValueError:
        raise UsageError(f"unknown channel {name!r}") from None


# -- commands -------------------------------------------------------------

def cmd_probabilities(cfg: RunConfig, pairs: list[str], times: list[float]) -> tuple[ReportDocument, list[dict]]:
    """Rows (t, pair, probability) for channel pairs or state pairs.

    State-pair rows are projections on the evolved pair, conditioned on both
    kaons surviving to time t.
    """
    ev, d, m = cfg.evolution_params(), cfg.decay_params(), cfg.mixing()
    pair0 = make_pair(m)
    rows: list[dict[str, Any]] = []
    for spec in pairs:
        a, sep, b = spec.partition(",")
        if not sep:
            raise UsageError(f"pair must be 'A,B', got {spec!r}")
        if a in STATE_NAMES and b in STATE_NAMES:
            f1, f2 = _state(a, cfg), _state(b, cfg)
            for t in times:
                evolved = evolve_pair(pair0, t, t, ev, m)
                p = joint_projection_probability(evolved, f1, f2) / evolved.norm2()
                rows.append({"t": t, "pair": f"{a},{b}", "kind": "projection", "probability": p})
        else:
            c1, c2 = _channel(a), _channel(b)
            if (c1, c2) not in SUPPORTED_PAIRS:
                raise UsageError(f"unsupported channel pair ({a}, {b})")
            for t in times:
                if t < 0:
                    raise UsageError("times must be >= 0")
                p = joint_decay_probability(c1, c2, t, d, ev)
                rows.append({"t": t, "pair": f"{a},{b}", "kind": "decay", "probability": p})
    doc = ReportDocument("probabilities", cfg.to_dict(), [{"kind": "probability_table", "rows": rows,
                                                           "assumption_notes": [NOTE_SQM_AMPLITUDES]}])
    return doc, rows


def _pair_ch(cfg: RunConfig, eta: float):
    (a1, a3), (b2, b4) = OPTIMAL_SINGLET_SETTINGS
    pair = make_pair(cfg.mixing())

    def vec(a):
        return FlavorState(math.cos(a), math.sin(a))

    def j(a, b):
        return eta * eta * joint_projection_probability(pair, vec(a), vec(b))

    # singles of the antisymmetric pair are 1/2 for every projector
    return ch_evaluate(j(a1, b2), j(a1, b4), j(a3, b2), j(a3, b4), eta * 0.5, eta * 0.5,
                       notes=(NOTE_SQM_AMPLITUDES, NOTE_DETECTION))


def cmd_inequality(cfg: RunConfig, which: str, ch_probs: list[float] | None = None,
                   efficiency: float = 1.0, swap: bool | None = None) -> ReportDocument:
    results: list[Any] = []
    if which == "eps":
        results.append(epsilon_test(cfg.epsilon.value))
    elif which == "epsprime":
        results.append(epsilon_prime_test(cfg.eps_prime.value))
    elif which == "bgh":
        both = bgh_contradiction(cfg.mixing())
        if swap is None:
            results += [both["direct"], both["swapped"]]
            results.append({"kind": "bgh_contradiction", "p_minus_q": both["p_minus_q"],
                            "both_hold": both["both_hold"]})
        else:
            results.append(both["swapped"] if swap else both["direct"])
    elif which == "ch":
        if ch_probs is not None:
            if len(ch_probs) != 6:
                raise UsageError("--ch-probs needs six values: p12,p14,p32,p34,p3_,p_2")
            results.append(ch_evaluate(*ch_probs))
        else:
            if not 0 < efficiency <= 1:
                raise UsageError("--efficiency must lie in (0, 1]")
            results.append(_pair_ch(cfg, efficiency))
    else:
        raise UsageError(f"unknown inequality {which!r}")
    return ReportDocument("inequality", cfg.to_dict(), results)


def cmd_efficiency_scan(cfg: RunConfig, angles: list[float]) -> ReportDocument:
    if not angles:
        raise UsageError("empty angle grid")
    for a in angles:
        if not 0 < a <= math.pi / 4 + 1e-15:
            raise UsageError(f"angle {a} outside (0, pi/4]")
    return ReportDocument("efficiency-scan", cfg.to_dict(), list(efficiency_scan(angles)))


def _load_target(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON: {exc}") from exc
    try:
        target = {}
        for entry in doc["settings"]:
            key = (str(entry["side1"]), str(entry["side2"]))
            target[key] = {(str(c["side1"]), str(c["side2"])): float(c["p"]) for c in entry["joint"]}
        return target
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed target: {exc}") from exc


def _factorizable_target() -> dict:
    cell = {(a, b): 0.25 for a in "+-" for b in "+-"}
    return {(x, y): dict(cell) for x in ("f1", "f3") for y in ("f2", "f4")}


def cmd_lhv(cfg: RunConfig, sub: str, args: argparse.Namespace) -> tuple[ReportDocument, list[dict]]:
    rows: list[dict] = []
    results: list[Any] = []
    if sub == "build-detection":
        if args.target:
            target, roles = _load_target(args.target), None
        elif args.factorizable:
            target, roles = _factorizable_target(), ChRoles("f1", "f3", "f2", "f4")
        else:
            target, roles = singlet_target(*OPTIMAL_SINGLET_SETTINGS), ChRoles("f1", "f3", "f2", "f4")
        try:
            built = build_detection_loophole_model(target, args.eta, loss=args.loss, roles=roles)
        except DomainError as exc:
            raise UsageError(str(exc)) from exc
        results.append(_build_summary(built, args))
    elif sub == "build-channel":
        branching = _parse_branching(args.branching)
        full_ratio = args.full_ratio
        if full_ratio is None:
            m = cfg.mixing()
            full_ratio = abs(m.p) / abs(m.q)
        try:
            built = build_channel_dependent_model(branching, args.delta_bias, full_ratio=full_ratio)
        except DomainError as exc:
            raise UsageError(str(exc)) from exc
        summary = _build_summary(built, args)
        if isinstance(built, HiddenVariableModel):
            summary["ratio_estimates"] = ratio_estimates(built)
            summary["branching_fractions"] = branching_fractions(built)
        results.append(summary)
    elif sub == "simulate":
        model = HiddenVariableModel.load(args.model)
        results, rows = _simulate(model, cfg)
    else:
        raise UsageError(f"unknown lhv subcommand {sub!r}")
    return ReportDocument(f"lhv {sub}", cfg.to_dict(), results), rows


def _build_summary(built, args) -> dict:
    if isinstance(built, InfeasibleResult):
        return built.to_dict()
    if not args.model:
        raise UsageError("build commands need --model <path> for the model file")
    built.save(args.model)
    return {"kind": "model_built", "feasible": True, "model_path": str(args.model),
            "n_lambdas": len(built.lambdas), "metadata": built.metadata}


def _parse_branching(text: str) -> dict[str, float]:
    out = {}
    for part in text.split(","):
        k, sep, v = part.partition("=")
        if not sep:
            raise UsageError(f"branching entries must be mode=rate, got {part!r}")
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"bad rate in {part!r}") from None
    return out


def _simulate(model: HiddenVariableModel, cfg: RunConfig):
    results: list[Any] = []
    rows: list[dict] = []
    for i, s1 in enumerate(model.settings(1)):
        for j, s2 in enumerate(model.settings(2)):
            st = statistics(model, (s1, s2))
            seed = cfg.mc.seed + 1000 * i + j
            counts = sample(model, (s1, s2), cfg.mc.n, seed)
            results.append(st)
            results.append({"kind": "sample_counts", "settings": [s1, s2], "n": cfg.mc.n, "seed": seed,
                            "counts": [{"side1": a, "side2": b, "count": c} for (a, b), c in counts.items()]})
            for (a, b), p in sorted(st.full_joint.items()):
                rows.append({"setting1": s1, "setting2": s2, "side1": a, "side2": b, "full_p": p,
                             "detected_p": st.detected_joint.get((a, b)), "count": counts.get((a, b), 0)})
    if len(model.settings(1)) >= 2 and len(model.settings(2)) >= 2:
        results.append(ch_check_full_ensemble(model))
        results.append(ch_check_detected(model))
    if model.metadata.get("construction") == "channel_dependent":
        results.append({"kind": "channel_estimates", "ratio_estimates": ratio_estimates(model),
                        "branching_fractions": branching_fractions(model)})
    return results, rows


def cmd_report(cfg: RunConfig) -> ReportDocument:
    results: list[Any] = [epsilon_test(cfg.epsilon.value), epsilon_prime_test(cfg.eps_prime.value)]
    both = bgh_contradiction(cfg.mixing())
    results += [both["direct"], both["swapped"], _pair_ch(cfg, 1.0)]
    results += efficiency_scan([math.pi / 4])
    return ReportDocument("report", cfg.to_dict(), results)


# -- argument parsing -----------------------------------------------------

def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--config", help="strict JSON run config (fallback: $KAONBELL_CONFIG)", **({"default": None} | d))
    p.add_argument("--preset", choices=["eps_sec1", "eps_sec2"], **({"default": None} | d))
    p.add_argument("--out", help="output path (default: stdout)", **({"default": None} | d))
    p.add_argument("--format", choices=["csv", "json"], **({"default": None} | d))
    p.add_argument("--seed", type=int, help="Monte Carlo seed (u64)", **({"default": None} | d))
    p.add_argument("--reproducible", action="store_true", help="omit the timestamp",
                   **({"default": False} | d))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kaonbell", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kaonbell {__version__}")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probabilities", help="joint probabilities on a time grid")
    _add_globals(p, suppress=True)
    p.add_argument("--pair", action="append", dest="pairs",
                   help="channel pair like '2pi0,pi+pi-' or state pair like 'K+,K0bar' (repeatable)")
    p.add_argument("--times", default="0", help="comma list or start:stop:n")

    p = sub.add_parser("inequality", help="evaluate one inequality")
    _add_globals(p, suppress=True)
    p.add_argument("which", choices=["eps", "epsprime", "bgh", "ch"])
    p.add_argument("--swap", action="store_true", default=None, help="bgh: only the K0 <-> K0bar swapped form")
    p.add_argument("--direct", action="store_false", dest="swap", help="bgh: only the direct form")
    p.add_argument("--ch-probs", help="ch: p12,p14,p32,p34,p3_,p_2")
    p.add_argument("--efficiency", type=float, default=1.0, help="ch on the kaon pair: detection efficiency")

    p = sub.add_parser("efficiency-scan", help="detection-efficiency thresholds per state angle")
    _add_globals(p, suppress=True)
    p.add_argument("--angles", default="pi/4,pi/6,pi/12", help="comma list of state angles in (0, pi/4]")

    p = sub.add_parser("lhv", help="build or simulate local hidden-variable models")
    _add_globals(p, suppress=True)
    lsub = p.add_subparsers(dest="lhv_command", required=True)
    q = lsub.add_parser("build-detection")
    _add_globals(q, suppress=True)
    q.add_argument("--eta", type=float, default=0.8)
    q.add_argument("--loss", choices=["independent", "free"], default="independent")
    q.add_argument("--target", help="JSON file with detected-sample target distributions")
    q.add_argument("--factorizable", action="store_true", help="use a product (uniform) target")
    q.add_argument("--model", help="where to write the model JSON")
    q = lsub.add_parser("build-channel")
    _add_globals(q, suppress=True)
    q.add_argument("--branching", default="semileptonic=0.5,pi+pi-=0.35,2pi0=0.15")
    q.add_argument("--delta-bias", type=float, default=0.0)
    q.add_argument("--full-ratio", type=float, default=None, help="default: |p|/|q| from the config")
    q.add_argument("--model", help="where to write the model JSON")
    q = lsub.add_parser("simulate")
    _add_globals(q, suppress=True)
    q.add_argument("--model", required=True, help="model JSON to simulate")

    p = sub.add_parser("report", help="all inequalities plus the maximal-entanglement threshold")
    _add_globals(p, suppress=True)
    return parser


def _emit(doc: ReportDocument, fmt: str, out: str | None, csv_text: str) -> None:
    text = doc.to_json() if fmt == "json" else csv_text
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _ineq_rows(doc: ReportDocument) -> str:
    rows, eff = [], []
    for r in doc.results:
        d = r.to_dict() if hasattr(r, "to_dict") else r
        if d.get("kind") == "inequality":
            rows.append(d)
        elif d.get("kind") == "efficiency_threshold":
            eff.append({"name": "efficiency_threshold", "theta": d["state_angle"], "threshold_eta": d["threshold_eta"]})
    if eff and not rows:
        return to_csv(["theta", "threshold_eta"], eff)
    if eff:
        return to_csv(INEQ_HEADER + ["theta", "threshold_eta"], rows + eff)
    return to_csv(INEQ_HEADER, rows)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = load_config(args.config, args.preset)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = replace(cfg, mc=MonteCarlo(cfg.mc.n, args.seed))
        fmt = args.format or cfg.output.format
        out = args.out or cfg.output.path
        cfg = replace(cfg, output=Output(fmt, out))

        if args.command == "probabilities":
            doc, rows = cmd_probabilities(cfg, args.pairs or [f"{a.value},{b.value}" for a, b in SUPPORTED_PAIRS],
                                          parse_times(args.times))
            csv_text = to_csv(["t", "pair", "probability"], rows)
        elif args.command == "inequality":
            probs = parse_float_list(args.ch_probs) if args.ch_probs else None
            doc = cmd_inequality(cfg, args.which, probs, args.efficiency, args.swap)
            csv_text = _ineq_rows(doc)
        elif args.command == "efficiency-scan":
            angles = [parse_angle(t) for t in args.angles.split(",") if t.strip()]
            doc = cmd_efficiency_scan(cfg, angles)
            csv_text = _ineq_rows(doc)
        elif args.command == "lhv":
            doc, rows = cmd_lhv(cfg, args.lhv_command, args)
            csv_text = to_csv(["setting1", "setting2", "side1", "side2", "full_p", "detected_p", "count"], rows) \
                if rows else _ineq_rows(doc)
        else:
            doc = cmd_report(cfg)
            csv_text = _ineq_rows(doc)
        doc.reproducible = args.reproducible
        _emit(doc, fmt, out, csv_text)
        return EXIT_OK
    except (ConfigError, UsageError, UnsupportedCombinationError) as exc:
        print(f"kaonbell: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelFormatError, OSError) as exc:
        print(f"kaonbell: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"kaonbell: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
