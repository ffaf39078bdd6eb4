"""Strict JSON run configuration."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from .entangled_pair import DecayChannelParams, r_params_from_eps
from .errors import ConfigError
from .kaon_core import EvolutionParams, MixingParams, epsilon_polar

SCHEMA_VERSION = 1
ENV_CONFIG = "KAONBELL_CONFIG"


@dataclass(frozen=True)
class Polar:
    magnitude: float = 0.0
    phase_deg: float = 0.0

    @property
    def value(self) -> complex:
        return epsilon_polar(self.magnitude, self.phase_deg)


@dataclass(frozen=True)
class Evolution:
    gamma_S: float = 1.0
    gamma_L: float = 0.0
    delta_m: float = 0.0


@dataclass(frozen=True)
class MonteCarlo:
    n: int = 100_000
    seed: int = 0


@dataclass(frozen=True)
class Output:
    format: str = "json"
    path: str | None = None


@dataclass(frozen=True)
class RunConfig:
    epsilon: Polar = field(default_factory=lambda: Polar(2.284e-3, 43.52))
    eps_prime: Polar = field(default_factory=lambda: Polar(3.8e-6, 0.0))
    eps_L: Polar | str = "equal_to_eps"
    alpha_deg: float = 0.0
    evolution: Evolution = field(default_factory=Evolution)
    x: Polar = field(default_factory=Polar)
    mc: MonteCarlo = field(default_factory=MonteCarlo)
    output: Output = field(default_factory=Output)

    def mixing(self) -> MixingParams:
        return MixingParams(self.epsilon.value, math.radians(self.alpha_deg))

    def evolution_params(self) -> EvolutionParams:
        e = self.evolution
        return EvolutionParams(e.gamma_S, e.gamma_L, e.delta_m)

    def eps_L_value(self) -> complex:
        return self.epsilon.value if self.eps_L == "equal_to_eps" else self.eps_L.value

    def decay_params(self) -> DecayChannelParams:
        return r_params_from_eps(self.epsilon.value, self.eps_prime.value, self.eps_L_value(), self.x.value)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["schema"] = SCHEMA_VERSION
        return d


# Magnitudes of eps quoted in the introduction and discussion sections. The
# introduction gives no phase; the discussion phase is reused for it.
PRESETS: dict[str, Polar] = {
    "eps_sec1": Polar(2.26e-3, 43.52),
    "eps_sec2": Polar(2.284e-3, 43.52),
}


def _number(v, where: str, *, minimum: float | None = None) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {v}")
    return v


def _obj(v, where: str, allowed: set[str]) -> dict[str, Any]:
    if not isinstance(v, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = set(v) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    return v


def _polar(v, where: str) -> Polar:
    v = _obj(v, where, {"magnitude", "phase_deg"})
    base = Polar()
    return Polar(
        _number(v.get("magnitude", base.magnitude), f"{where}.magnitude", minimum=0.0),
        _number(v.get("phase_deg", base.phase_deg), f"{where}.phase_deg"),
    )


def parse_config(doc: Any) -> RunConfig:
    """Validate a decoded JSON document; every error is a ConfigError."""
    top = _obj(doc, "config", {"schema", "epsilon", "eps_prime", "eps_L", "alpha_deg", "evolution", "x", "mc", "output"})
    if top.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"config: 'schema' must be {SCHEMA_VERSION}")
    cfg = RunConfig()
    kw: dict[str, Any] = {}
    for key in ("epsilon", "eps_prime", "x"):
        if key in top:
            kw[key] = _polar(top[key], key)
    if "eps_L" in top:
        kw["eps_L"] = "equal_to_eps" if top["eps_L"] == "equal_to_eps" else _polar(top["eps_L"], "eps_L")
    if "alpha_deg" in top:
        kw["alpha_deg"] = _number(top["alpha_deg"], "alpha_deg")
    if "evolution" in top:
        ev = _obj(top["evolution"], "evolution", {"gamma_S", "gamma_L", "delta_m"})
        g_s = _number(ev.get("gamma_S", 1.0), "evolution.gamma_S")
        g_l = _number(ev.get("gamma_L", 0.0), "evolution.gamma_L", minimum=0.0)
        if not g_s > g_l:
            raise ConfigError("evolution: need gamma_S > gamma_L >= 0")
        kw["evolution"] = Evolution(g_s, g_l, _number(ev.get("delta_m", 0.0), "evolution.delta_m"))
    if "mc" in top:
        mc = _obj(top["mc"], "mc", {"n", "seed"})
        n, seed = mc.get("n", cfg.mc.n), mc.get("seed", cfg.mc.seed)
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ConfigError("mc.n: expected an integer >= 1")
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise ConfigError("mc.seed: expected an unsigned 64-bit integer")
        kw["mc"] = MonteCarlo(n, seed)
    if "output" in top:
        out = _obj(top["output"], "output", {"format", "path"})
        fmt = out.get("format", "json")
        if fmt not in ("csv", "json"):
            raise ConfigError("output.format: expected 'csv' or 'json'")
        path = out.get("path")
        if path is not None and not isinstance(path, str):
            raise ConfigError("output.path: expected a string")
        kw["output"] = Output(fmt, path)
    return replace(cfg, **kw)


def load_config(path: str | os.PathLike | None = None, preset: str | None = None) -> RunConfig:
    """Read a config file (or $KAONBELL_CONFIG, or defaults) and apply a preset.

    Raises ConfigError for invalid content and OSError for unreadable files.
    """
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is None:
        cfg = RunConfig()
    else:
        text = Path(path).read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        cfg = parse_config(doc)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        cfg = replace(cfg, epsilon=PRESETS[preset])
    return cfg
