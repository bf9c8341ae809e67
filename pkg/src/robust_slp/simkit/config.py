"""Scenario configuration and its INI-style file format.

Units: ``gamma_db`` in dB, ``sigma2`` in linear watts, ``epsilon`` (error
radius) and ``xi2`` (error variance) linear, ``upsilon`` a probability.

Example file::

    [scenario]
    N = 6
    K = 6
    modulation = 8
    sigma2 = 1.0
    seed = 2024
    workers = 1

    [sinr]
    gamma_db = 5, 10, 15

    [methods]
    methods = NonRobust, WorstCase

    [uncertainty]
    epsilon = 0.01, 0.05
    xi2 = 0.004
    upsilon = 0.05

    [counts]
    realizations = 200
    slots = 20
    noise_draws = 100

    [feasibility]
    sweep = violation_prob

    [benchmark]
    k_grid = 2, 4, 6, 8
    solves = 30
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

from robust_slp.errors import ConfigError, SlpError
from robust_slp.robustcons import Method

# section -> keys accepted in that section
SCHEMA = {
    "scenario": ("N", "K", "modulation", "phase_offset", "sigma2", "seed", "workers"),
    "sinr": ("gamma_db",),
    "methods": ("methods",),
    "uncertainty": ("epsilon", "xi2", "upsilon"),
    "counts": ("realizations", "slots", "noise_draws", "validation_samples"),
    "feasibility": ("sweep",),
    "benchmark": ("k_grid", "solves", "robust_method"),
}

SWEEPS = ("violation_prob", "variance")


def _default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class ScenarioConfig:
    N: int = 4
    K: int = 4
    modulation: int = 8
    phase_offset: float = 0.0
    sigma2: tuple = (1.0,)
    gamma_db: tuple = (10.0,)
    methods: tuple = (Method.NON_ROBUST,)
    epsilon: tuple = (0.01,)
    xi2: tuple = (0.004,)
    upsilon: tuple = (0.05,)
    realizations: int = 100
    slots: int = 50
    noise_draws: int = 100
    validation_samples: int = 10_000
    seed: int = 0
    workers: int = field(default_factory=_default_workers)
    sweep: str = "violation_prob"
    k_grid: tuple = (2, 4, 6, 8)
    solves: int = 30
    robust_method: Method = Method.SAFE_APPROX_2

    def __post_init__(self):
        set_ = object.__setattr__
        for key in ("sigma2", "gamma_db", "epsilon", "xi2", "upsilon", "phase_offset"):
            try:
                value = _floats(getattr(self, key))
            except (TypeError, ValueError):
                raise ConfigError(key, f"expected numbers, got {getattr(self, key)!r}") from None
            set_(self, key, value[0] if key == "phase_offset" else value)
        try:
            set_(self, "k_grid", tuple(int(k) for k in _tuple(self.k_grid)))
        except (TypeError, ValueError):
            raise ConfigError("k_grid", f"expected integers, got {self.k_grid!r}") from None
        try:
            set_(self, "methods", tuple(Method.parse(m) for m in _tuple(self.methods)))
        except SlpError as exc:
            raise ConfigError("methods", str(exc)) from None
        try:
            set_(self, "robust_method", Method.parse(self.robust_method))
        except SlpError as exc:
            raise ConfigError("robust_method", str(exc)) from None
        self.validate()

    # -- validation -------------------------------------------------------
    def validate(self):
        for key in ("N", "K", "modulation", "realizations", "slots", "noise_draws",
                    "validation_samples", "workers", "solves", "seed"):
            value = getattr(self, key)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(key, f"must be an integer, got {value!r}")
        for key in ("N", "K", "realizations", "slots", "noise_draws", "validation_samples",
                    "workers", "solves"):
            if getattr(self, key) < 1:
                raise ConfigError(key, f"must be >= 1, got {getattr(self, key)}")
        if self.seed < 0:
            raise ConfigError("seed", f"must be >= 0, got {self.seed}")
        if self.K > self.N:
            raise ConfigError("K", f"K <= N is required (K={self.K}, N={self.N})")
        if self.modulation < 3:
            raise ConfigError("modulation", f"PSK order must be >= 3, got {self.modulation}")
        if len(self.sigma2) not in (1, self.K):
            raise ConfigError("sigma2", f"give one value or K={self.K} values")
        if any(not (v > 0 and math.isfinite(v)) for v in self.sigma2):
            raise ConfigError("sigma2", "noise variances must be finite and > 0")
        for key in ("gamma_db", "methods"):
            if not getattr(self, key):
                raise ConfigError(key, "must not be empty")
        if any(not math.isfinite(g) for g in self.gamma_db):
            raise ConfigError("gamma_db", "SINR targets must be finite")
        if any(not (e >= 0 and math.isfinite(e)) for e in self.epsilon):
            raise ConfigError("epsilon", "error radii must be finite and >= 0")
        if any(not (v >= 0 and math.isfinite(v)) for v in self.xi2):
            raise ConfigError("xi2", "error variances must be finite and >= 0")
        if any(not (0.0 < u <= 0.5) for u in self.upsilon):
            bad = [u for u in self.upsilon if not (0.0 < u <= 0.5)]
            raise ConfigError("upsilon", f"violation probability must lie in (0, 1/2], got {bad[0]}")
        if self.sweep not in SWEEPS:
            raise ConfigError("sweep", f"must be one of {', '.join(SWEEPS)}, got {self.sweep!r}")
        if any(k < 1 for k in self.k_grid):
            raise ConfigError("k_grid", "user counts must be >= 1")
        if self.robust_method is Method.NON_ROBUST:
            raise ConfigError("robust_method", "must name a robust method")
        if self.solves < 30:
            raise ConfigError("solves", f"timing needs at least 30 solves, got {self.solves}")
        if not math.isfinite(self.phase_offset):
            raise ConfigError("phase_offset", "must be finite")

    # -- derived quantities -----------------------------------------------
    @property
    def gamma_linear(self) -> tuple:
        return tuple(10.0 ** (g / 10.0) for g in self.gamma_db)

    def sigma2_per_user(self, K=None):
        K = K or self.K
        return self.sigma2 * K if len(self.sigma2) == 1 else self.sigma2

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    # -- serialisation ----------------------------------------------------
    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Method):
                v = v.value
            elif isinstance(v, tuple):
                v = [x.value if isinstance(x, Method) else x for x in v]
            out[f.name] = v
        return out

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form, ignoring the worker count."""
        d = self.to_dict()
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_ini(self) -> str:
        d = self.to_dict()
        lines = []
        for section, keys in SCHEMA.items():
            lines.append(f"[{section}]")
            for key in keys:
                v = d[key]
                if isinstance(v, list):
                    v = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
                elif isinstance(v, float):
                    v = repr(v)
                lines.append(f"{key} = {v}")
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(key, "unknown key")
        return cls(**d)

    @classmethod
    def from_ini(cls, text: str) -> "ScenarioConfig":
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError("file", f"unreadable config: {exc}") from None
        values = {}
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(section, "unknown section")
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(key, f"unknown key in section [{section}]")
                values[key] = _parse_value(key, raw)
        return cls.from_dict(values)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_ini(fh.read())


_INT_KEYS = {"N", "K", "modulation", "seed", "workers", "realizations", "slots",
             "noise_draws", "validation_samples", "solves"}
_LIST_KEYS = {"sigma2", "gamma_db", "epsilon", "xi2", "upsilon", "methods", "k_grid"}
_STR_KEYS = {"sweep", "robust_method", "methods"}


def _parse_value(key, raw):
    raw = raw.strip()
    try:
        if key in _LIST_KEYS:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if key in _STR_KEYS:
                return tuple(items)
            if key == "k_grid":
                return tuple(int(x) for x in items)
            return tuple(float(x) for x in items)
        if key in _INT_KEYS:
            return int(raw)
        if key in _STR_KEYS:
            return raw
        return float(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse value {raw!r}") from None


def _tuple(v):
    if isinstance(v, (str, Method)):
        return (v,)
    try:
        return tuple(v)
    except TypeError:
        return (v,)


def _floats(v):
    return tuple(float(x) for x in _tuple(v))
