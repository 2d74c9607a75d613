"""Crawl configuration: defaults, YAML loading, and environment overrides.

Every knob is a top-level key of a YAML mapping. Scalar keys can also be set
through ``SBCRAWL_<KEY>`` environment variables (e.g. ``SBCRAWL_THETA=0.55``),
which take precedence over the file.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .graph import WeightMode

ENV_PREFIX = "SBCRAWL_"


class ConfigError(ValueError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


def _data_lines(name: str) -> tuple[str, ...]:
    text = resources.files("sbcrawl").joinpath("data", name).read_text(encoding="utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#"))


@lru_cache(maxsize=None)
def default_target_mimes() -> frozenset[str]:
    return frozenset(_data_lines("target_mimes.txt"))


@lru_cache(maxsize=None)
def default_extension_blocklist() -> frozenset[str]:
    return frozenset(_data_lines("blocked_extensions.txt"))


DEFAULT_MIME_BLOCKLIST = ("image/*", "audio/*", "video/*")


@dataclass
class CrawlConfig:
    budget: float = math.inf
    weight_mode: WeightMode = WeightMode.REQUESTS
    # tag-path representation
    n: int = 2
    m: int = 12
    w: int = 15
    prime: int = 2147483629
    theta: float = 0.75
    index_backend: str = "auto"
    ann_threshold: int = 512
    hnsw_m: int = 16
    hnsw_ef_construction: int = 100
    hnsw_ef_search: int = 64
    # bandit
    alpha: float = 2 * math.sqrt(2)
    epsilon: float = 1e-6
    # URL classifier
    b: int = 10
    learning_rate: float = 0.1
    lr_decay: float = 0.001
    l2: float = 1e-6
    epochs: int = 1
    # early stopping
    early_stop: bool = False
    nu: int = 1000
    eps_stop: float = 0.2
    gamma: float = 0.05
    kappa: int = 15
    # filters
    target_mimes: frozenset[str] = field(default_factory=default_target_mimes)
    mime_blocklist: tuple[str, ...] = DEFAULT_MIME_BLOCKLIST
    extension_blocklist: frozenset[str] = field(default_factory=default_extension_blocklist)
    # run control
    seed: int = 0
    max_targets: int | None = None
    politeness_delay: float = 1.0
    respect_robots: bool = True
    user_agent: str = "sbcrawl/0.1 (+https://example.org/sbcrawl; focused data crawler)"
    store: str | None = None
    trace_path: str | None = None
    # baselines
    tpoff_bootstrap: int = 3000
    focused_retrain: int = 50

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if isinstance(self.weight_mode, str):
            try:
                self.weight_mode = WeightMode(self.weight_mode)
            except ValueError:
                raise ConfigError("weight_mode", f"expected one of {[m.value for m in WeightMode]}") from None
        checks = {
            "budget": self.budget >= 0,
            "n": self.n >= 1,
            "m": self.m >= 1,
            "w": self.w > self.m,
            "prime": self.prime % 2 == 1,
            "theta": 0.0 <= self.theta <= 1.0,
            "alpha": self.alpha >= 0,
            "epsilon": self.epsilon > 0,
            "b": self.b >= 1,
            "nu": self.nu >= 1,
            "gamma": 0.0 < self.gamma <= 1.0,
            "kappa": self.kappa >= 1,
            "politeness_delay": self.politeness_delay >= 0,
            "index_backend": self.index_backend in ("auto", "exact", "hnsw"),
            "tpoff_bootstrap": self.tpoff_bootstrap >= 0,
            "focused_retrain": self.focused_retrain >= 1,
        }
        for key, ok in checks.items():
            if not ok:
                raise ConfigError(key, f"invalid value {getattr(self, key)!r}")
        self.target_mimes = frozenset(self.target_mimes)
        self.mime_blocklist = tuple(self.mime_blocklist)
        self.extension_blocklist = frozenset(e if e.startswith(".") else "." + e for e in self.extension_blocklist)

    def replace(self, **changes: Any) -> CrawlConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, frozenset):
                v = sorted(v)
            elif isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, WeightMode):
                v = v.value
            out[f.name] = v
        return out


_FIELDS = {f.name: f for f in dataclasses.fields(CrawlConfig)}
_ALIASES = {"ε": "epsilon", "θ": "theta", "α": "alpha", "ν": "nu", "γ": "gamma", "κ": "kappa"}


def _coerce(key: str, value: Any, current: Any) -> Any:
    if value is None:
        return None
    try:
        if key in ("target_mimes", "extension_blocklist"):
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split() if v]
            return frozenset(str(v) for v in value)
        if key == "mime_blocklist":
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split() if v]
            return tuple(str(v) for v in value)
        if isinstance(current, bool):
            if isinstance(value, str):
                low = value.strip().lower()
                if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                    raise ValueError(value)
                return low in ("1", "true", "yes", "on")
            return bool(value)
        if isinstance(current, WeightMode):
            return WeightMode(value)
        if isinstance(current, int) and not isinstance(current, bool):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if isinstance(current, float):
            if isinstance(value, str) and value.strip().lower() in ("inf", ".inf", "infinity"):
                return math.inf
            return float(value)
        if key == "max_targets":
            return int(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot interpret {value!r}") from None


def from_mapping(data: Mapping[str, Any], base: CrawlConfig | None = None) -> CrawlConfig:
    base = base or CrawlConfig()
    changes: dict[str, Any] = {}
    for raw_key, value in data.items():
        key = _ALIASES.get(str(raw_key), str(raw_key))
        if key not in _FIELDS:
            raise ConfigError(str(raw_key), "unknown configuration key")
        changes[key] = _coerce(key, value, getattr(base, key))
    return dataclasses.replace(base, **changes)


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX) :].lower()
            if key in _FIELDS:
                out[key] = value
    return out


def load_config(
    path: str | Path | None = None,
    environ: Mapping[str, str] | None = None,
    **overrides: Any,
) -> CrawlConfig:
    """Defaults, then the YAML file, then environment, then explicit overrides."""
    cfg = CrawlConfig()
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"not valid YAML: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("<file>", "top level must be a mapping")
        cfg = from_mapping(data, cfg)
    cfg = from_mapping(env_overrides(environ), cfg)
    cfg = from_mapping({k: v for k, v in overrides.items() if v is not None}, cfg)
    return cfg


def dump_config(cfg: CrawlConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
