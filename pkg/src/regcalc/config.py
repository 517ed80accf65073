"""Flat key = value run configuration.

Lines are ``key = value``; ``#`` starts a comment. Lists are comma separated.
Numbers accept the power notation ``2^-12``. Keys of the form
``threshold.<experiment>`` fill the threshold table.
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .noise import TimeGrid
from .regular_calculus import MIN_LADDER_MULTIPLE

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "EXPERIMENTS", "resolve_experiments"]

EXPERIMENTS = {
    "E1": "E1-forward-vs-ito",
    "E2": "E2-remainder-chi-bound",
    "E3": "E3-qv-divergence-contrast",
    "E4": "E4-mild-ito-residual",
    "E5": "E5-fukushima-orthogonality",
    "E6": "E6-tensor-covariation",
    "E7": "E7-ondrejat-order",
    "E8": "E8-fractional-extension",
}

# Frozen from the pilot run described in README.md (Calibration).
DEFAULT_THRESHOLDS = {"E1": 0.0782}


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending field name."""

    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


@dataclass(frozen=True)
class RunConfig:
    N: int = 8
    T: float = 1.0
    dt: float = 2.0**-12
    eps_multiples: tuple = (4, 16, 64)
    q_alpha: float = 2.0
    sigma_scale: float = 1.0
    b: str = "zero"
    x0: str = "e1"
    hurst: float = 0.75
    master_seed: int = 20240601
    n_paths: int = 200
    experiments: tuple = tuple(EXPERIMENTS)
    out_dir: str = "out"
    threads: int = 1
    e3_dt: float = 2.0**-14
    e3_modes: tuple = (8, 16, 32)
    e8_dt: float = 2.0**-13
    fbm_paths: int = 50
    e5_radius: float = 1e-3
    young_levels: int = 6
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.T, self.dt)

    def x0_vector(self, n: Optional[int] = None) -> np.ndarray:
        n = self.N if n is None else n
        return _x0_vector(self.x0, n)

    def b_parts(self, n: Optional[int] = None):
        """(b0 vector or None, feedback diagonal or None)."""
        n = self.N if n is None else n
        kind, _, val = self.b.partition(":")
        if kind == "zero":
            return None, None
        if kind == "const":
            return np.full(n, float(val)), None
        return None, np.full(n, float(val))


def _x0_vector(spec: str, n: int) -> np.ndarray:
    if spec == "zero":
        return np.zeros(n)
    m = re.fullmatch(r"e(\d+)", spec)
    if m:
        v = np.zeros(n)
        v[int(m.group(1)) - 1] = 1.0
        return v
    if spec == "decay":
        return 1.0 / np.arange(1, n + 1)
    raise ValueError(spec)


def _number(text: str) -> float:
    text = text.strip()
    m = re.fullmatch(r"([+-]?\d+(?:\.\d*)?)\s*\^\s*([+-]?\d+)", text)
    if m:
        return float(m.group(1)) ** int(m.group(2))
    return float(text)


def _int(text: str) -> int:
    v = _number(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _list(text: str, conv):
    return tuple(conv(t) for t in text.split(",") if t.strip())


_CONVERTERS = {
    "N": _int,
    "T": _number,
    "dt": _number,
    "eps_multiples": lambda s: _list(s, _int),
    "q_alpha": _number,
    "sigma_scale": _number,
    "b": str.strip,
    "x0": str.strip,
    "hurst": _number,
    "master_seed": _int,
    "n_paths": _int,
    "experiments": lambda s: _list(s, str.strip),
    "out_dir": str.strip,
    "threads": _int,
    "e3_dt": _number,
    "e3_modes": lambda s: _list(s, _int),
    "e8_dt": _number,
    "fbm_paths": _int,
    "e5_radius": _number,
    "young_levels": _int,
}


def resolve_experiments(names) -> tuple:
    """Map short (E1) or full (E1-forward-vs-ito) names to full names, keeping order."""
    out = []
    for name in names:
        key = name.split("-", 1)[0].upper()
        if key not in EXPERIMENTS or name.lower() not in (key.lower(), EXPERIMENTS[key].lower()):
            raise ConfigError("experiments", f"unknown experiment {name!r}")
        if EXPERIMENTS[key] not in out:
            out.append(EXPERIMENTS[key])
    return tuple(out)


def validate(cfg: RunConfig) -> RunConfig:
    def check(ok, name, msg):
        if not ok:
            raise ConfigError(name, msg)

    check(cfg.N >= 1, "N", "must be >= 1")
    check(cfg.T > 0, "T", "must be > 0")
    check(cfg.dt > 0, "dt", "must be > 0")
    try:
        grid = cfg.grid
    except ValueError as exc:
        raise ConfigError("dt", str(exc)) from None
    ms = cfg.eps_multiples
    check(len(ms) >= 3, "eps_multiples", "need at least 3 rungs")
    check(all(b > a for a, b in zip(ms, ms[1:])), "eps_multiples", "must be strictly increasing")
    check(ms[0] >= MIN_LADDER_MULTIPLE, "eps_multiples", f"multiples must be >= {MIN_LADDER_MULTIPLE}")
    check(ms[-1] * 4 < grid.J, "eps_multiples", "largest eps must stay below T/4")
    check(cfg.q_alpha > 1, "q_alpha", "must exceed 1 so that Q is trace class")
    check(np.isfinite(cfg.sigma_scale), "sigma_scale", "must be finite")
    kind, sep, val = cfg.b.partition(":")
    check(kind in ("zero", "const", "feedback") and (kind == "zero") != bool(sep), "b", "use zero, const:<v> or feedback:<v>")
    if sep:
        try:
            float(val)
        except ValueError:
            raise ConfigError("b", f"{val!r} is not a number") from None
    try:
        _x0_vector(cfg.x0, cfg.N)
    except (ValueError, IndexError):
        raise ConfigError("x0", "use zero, decay or e<k> with 1 <= k <= N") from None
    check(0.5 < cfg.hurst < 1.0, "hurst", "must lie in (0.5, 1)")
    check(cfg.master_seed >= 0, "master_seed", "must be >= 0")
    check(cfg.n_paths >= 1, "n_paths", "must be >= 1")
    check(len(cfg.experiments) > 0, "experiments", "experiment list is empty")
    check(cfg.threads >= 1, "threads", "must be >= 1")
    for name in ("e3_dt", "e8_dt"):
        try:
            TimeGrid(cfg.T, getattr(cfg, name))
        except ValueError as exc:
            raise ConfigError(name, str(exc)) from None
    check(len(cfg.e3_modes) >= 2 and all(m >= 1 for m in cfg.e3_modes), "e3_modes", "need >= 2 positive mode counts")
    check(cfg.fbm_paths >= 1, "fbm_paths", "must be >= 1")
    check(cfg.e5_radius >= 0, "e5_radius", "must be >= 0")
    check(cfg.young_levels >= 3, "young_levels", "must be >= 3")
    return dataclasses.replace(cfg, experiments=resolve_experiments(cfg.experiments))


def parse_config(text: str, **overrides) -> RunConfig:
    values = {}
    thresholds = dict(DEFAULT_THRESHOLDS)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        if key.startswith("threshold."):
            exp = key.split(".", 1)[1]
            try:
                thresholds[exp.split("-", 1)[0].upper()] = _number(val)
            except ValueError:
                raise ConfigError(key, f"{val!r} is not a number") from None
            continue
        if key not in _CONVERTERS:
            raise ConfigError(key, "unknown key")
        try:
            values[key] = _CONVERTERS[key](val)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return validate(RunConfig(thresholds=thresholds, **values))


def load_config(path: Optional[str], **overrides) -> RunConfig:
    if path is None:
        return parse_config("", **overrides)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, **overrides)
