"""Run configuration: flat ``key = value`` files, a-rules and beta specs."""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class RunConfig:
    model: str = "gaussian"
    grid: int = 32
    a: Optional[str] = None
    measure: str = "strip"
    pinning: str = "constant"
    beta: str = "critical"
    boundary: str = "f"
    N: Optional[int] = None
    nmax: Optional[int] = None
    samples: Optional[int] = None
    seed: int = 0
    out: Optional[str] = None
    input: Optional[str] = None
    suite: str = "all"
    eps: Optional[float] = None
    ladder_samples: int = 100000
    # acceptance-suite sizes
    nmax_spectral: int = 4096
    scaling_N: int = 4096
    scaling_M: int = 20000
    path_N: int = 2048
    path_M: int = 5000
    mgf_N: int = 4096
    mgf_M: int = 50000
    chi_samples: int = 1000000

    def merged(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


_TYPES = {f.name: f.type for f in fields(RunConfig)}
# keys written to manifests for provenance; accepted and ignored on input
INFO_KEYS = {"command", "swlab_version", "numpy_version", "scipy_version", "python_version",
             "backend", "a_resolved", "beta_resolved", "beta_c", "beta_c_a", "free_energy", "threads",
             "C_prime", "ladder_constant", "ladder_stderr"}
MODELS = ("gaussian",)
PINNINGS = ("constant", "smooth", "zero")
BOUNDARIES = {"f": "f", "free": "f", "c": "c", "constrained": "c"}

_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")
_A_RULE = re.compile(r"^auto:\s*(?:([0-9.eE+-]+)\s*\*\s*)?N\s*\^\s*\(?\s*(-?[0-9.eE+-]+)\s*\)?$")
_BETA = re.compile(r"^critical\s*(?:([+-])\s*([0-9.eE+-]+)\s*(/\s*sqrtN)?)?$")


def _convert(key, text):
    typ = _TYPES[key]
    if text.lower() in ("none", ""):
        if "Optional" in str(typ):
            return None
        raise ConfigurationError(f"key '{key}' needs a value")
    try:
        if "int" in str(typ):
            v = float(text)
            if v != int(v):
                raise ValueError
            return int(v)
        if "float" in str(typ):
            return float(text)
    except ValueError:
        raise ConfigurationError(f"bad value for '{key}': {text!r}") from None
    return text


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Unknown keys,
    duplicates and unparsable lines raise ConfigurationError."""
    vals = {}
    for k, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigurationError(f"line {k}: expected 'key = value', got {raw!r}")
        key, val = m.group(1), m.group(2)
        if key in vals:
            raise ConfigurationError(f"line {k}: duplicate key '{key}'")
        if key in INFO_KEYS:
            vals[key] = None
            continue
        if key not in _TYPES:
            raise ConfigurationError(f"line {k}: unknown key '{key}'")
        vals[key] = _convert(key, val)
    cfg = replace(base or RunConfig(), **{k: v for k, v in vals.items() if k not in INFO_KEYS})
    validate(cfg)
    return cfg


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from None
    return parse_config_text(text, base)


def validate(cfg: RunConfig):
    if cfg.model not in MODELS:
        raise ConfigurationError(f"unknown model '{cfg.model}' (available: {', '.join(MODELS)})")
    if cfg.measure not in ("strip", "renewal"):
        raise ConfigurationError(f"unknown measure '{cfg.measure}' (strip, renewal)")
    if cfg.pinning not in PINNINGS:
        raise ConfigurationError(f"unknown pinning '{cfg.pinning}'")
    if cfg.boundary not in BOUNDARIES:
        raise ConfigurationError(f"unknown boundary '{cfg.boundary}'")
    if cfg.grid < 1:
        raise ConfigurationError("grid must be >= 1")
    for k in ("N", "nmax", "samples"):
        v = getattr(cfg, k)
        if v is not None and v < 1:
            raise ConfigurationError(f"{k} must be >= 1")
    if cfg.a is not None:
        for part in str(cfg.a).split(","):
            parse_a_rule(part)
    parse_beta_spec(cfg.beta)


def parse_a_rule(spec: str):
    """Returns ('literal', a) or ('rule', (c, gamma)) for a = c N^gamma."""
    s = str(spec).strip()
    m = _A_RULE.match(s)
    if m:
        c = float(m.group(1)) if m.group(1) else 1.0
        return "rule", (c, float(m.group(2)))
    try:
        a = float(s)
    except ValueError:
        raise ConfigurationError(f"bad a spec {spec!r}; use a number or auto:N^-0.75") from None
    if not np.isfinite(a) or a < 0:
        raise ConfigurationError("a must be a finite number >= 0")
    return "literal", a


def resolve_a(spec, N: Optional[int]) -> float:
    kind, v = parse_a_rule(spec)
    if kind == "literal":
        return float(v)
    if N is None:
        raise ConfigurationError("an a-rule needs N")
    c, g = v
    return float(c * float(N) ** g)


def parse_beta_spec(spec: str):
    """Returns ('literal', beta) or ('critical', (offset, per_sqrtN))."""
    s = str(spec).strip()
    m = _BETA.match(s)
    if m:
        if m.group(1) is None:
            return "critical", (0.0, False)
        try:
            x = float(m.group(2))
        except ValueError:
            raise ConfigurationError(f"bad beta offset in {spec!r}") from None
        return "critical", (x if m.group(1) == "+" else -x, m.group(3) is not None)
    try:
        return "literal", float(s)
    except ValueError:
        raise ConfigurationError(f"bad beta spec {spec!r}; use a number, critical, "
                                 "critical+x or critical+x/sqrtN") from None


def resolve_beta(spec, critical: float, N: Optional[int] = None) -> float:
    kind, v = parse_beta_spec(spec)
    if kind == "literal":
        return float(v)
    off, scaled = v
    if scaled:
        if N is None:
            raise ConfigurationError("a /sqrtN offset needs N")
        off /= np.sqrt(N)
    return float(critical + off)


def beta_offset(spec, N: Optional[int] = None) -> Optional[float]:
    """Offset from the critical point, or None for exactly critical."""
    kind, v = parse_beta_spec(spec)
    if kind == "literal":
        raise ConfigurationError("the acceptance suite takes beta relative to critical")
    off, scaled = v
    if off == 0.0:
        return None
    return off / np.sqrt(N) if scaled else off
