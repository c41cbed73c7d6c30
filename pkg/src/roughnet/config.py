"""Experiment configuration: a flat ``key = value`` text file.

Grammar
-------
- one ``key = value`` per line; whitespace around both is ignored;
- blank lines and lines starting with ``#`` are skipped, as is anything after
  `` #`` on a value line;
- keys are unique; unknown keys are errors;
- vectors (``b0``) are comma-separated numbers.

Example::

    example = flat-product
    seed = 42
    margin = 0.2
    b0 = 0, 0
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .examples import REGISTRY, get_example
from .theorem import TheoremConfig

SEED_LIMIT = 2**64


@dataclass
class ExperimentConfig:
    example: str
    seed: int = 0
    box_size: float = 5.0
    warp_amplitude: float = 0.5
    distance_mode: str = "analytic"
    b0: Optional[list] = None
    out: str = "out"
    graph_samples: int = 4000
    graph_k: int = 12
    eps0: Optional[float] = None
    epsB: Optional[float] = None
    theorem: TheoremConfig = field(default_factory=TheoremConfig)

    def submersion(self):
        graph = {"samples": self.graph_samples, "k": self.graph_k, "seed": self.seed % 2**32}
        params = {"box_size": self.box_size}
        if self.example == "flat-product":
            params["distance_mode"] = self.distance_mode
            params["graph_options"] = graph
        elif self.example == "warped":
            params["warp_amplitude"] = self.warp_amplitude
            params["graph_options"] = graph
        else:
            params["graph_options"] = graph
        return get_example(self.example, **params)

    def base_point(self, S):
        return S.base.domain_lo.copy() if self.b0 is None else np.asarray(self.b0, dtype=float)

    def to_dict(self):
        out = {k: v for k, v in dataclasses.asdict(self).items() if k != "theorem"}
        out.update(dataclasses.asdict(self.theorem))
        return out


_TOP = {f.name: f for f in dataclasses.fields(ExperimentConfig) if f.name != "theorem"}
_THM = {f.name: f for f in dataclasses.fields(TheoremConfig)}
COUNT_KEYS = {"holonomy_samples", "hlc_samples", "rif_grid", "rif_pairs_per_fiber", "fiber_samples",
              "base_samples", "fiber_probes", "probes", "graph_samples", "graph_k"}
NONNEG_COUNT_KEYS = {"path_audit_pairs", "lemma32_pairs"}
POSITIVE_KEYS = {"margin", "step", "holonomy_loop_size", "holonomy_tol_factor", "box_size", "rif_min_C"}


def _convert(key, raw, kind):
    try:
        if key == "b0":
            return [float(v) for v in raw.split(",")]
        if kind in ("int", int):
            if not raw.lstrip("-").isdigit():
                raise ValueError(raw)
            return int(raw)
        if kind in ("float", float, "Optional[float]"):
            v = float(raw)
            if not np.isfinite(v):
                raise ValueError(raw)
            return v
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


def parse_config(text, source="<config>"):
    """Parse config text into an :class:`ExperimentConfig` (raises :class:`ConfigError`)."""
    seen = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.split(" #")[0].strip()
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if key not in _TOP and key not in _THM:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        seen[key] = value
    if "example" not in seen:
        raise ConfigError(f"{source}: missing required key 'example'")
    top, thm = {}, {}
    for key, raw in seen.items():
        f = _TOP.get(key) or _THM[key]
        (top if key in _TOP else thm)[key] = _convert(key, raw, f.type)
    cfg = ExperimentConfig(**top, theorem=TheoremConfig(**thm))
    validate(cfg)
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def validate(cfg):
    if cfg.example not in REGISTRY:
        raise ConfigError(f"unknown example {cfg.example!r}; choose from {sorted(REGISTRY)}")
    if not 0 <= cfg.seed < SEED_LIMIT:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    if cfg.distance_mode not in ("analytic", "graph"):
        raise ConfigError("distance_mode must be 'analytic' or 'graph'")
    if not 0 <= cfg.warp_amplitude < 1:
        raise ConfigError("warp_amplitude must lie in [0, 1)")
    t = cfg.theorem
    for key in COUNT_KEYS:
        v = getattr(t, key) if hasattr(t, key) else getattr(cfg, key)
        if v <= 0:
            raise ConfigError(f"{key} must be positive")
    for key in NONNEG_COUNT_KEYS:
        if getattr(t, key) < 0:
            raise ConfigError(f"{key} must be nonnegative")
    for key in POSITIVE_KEYS:
        v = getattr(t, key) if hasattr(t, key) else getattr(cfg, key)
        if not v > 0:
            raise ConfigError(f"{key} must be positive")
    if t.rif_min_A <= 1:
        raise ConfigError("rif_min_A must exceed 1")
    if cfg.b0 is not None and len(cfg.b0) != 2:
        raise ConfigError("b0 needs two coordinates")
    if (cfg.eps0 is None) != (cfg.epsB is None):
        raise ConfigError("eps0 and epsB must be given together")
    # the theorem stage seeds itself from the experiment seed
    t.seed = cfg.seed
    return cfg
