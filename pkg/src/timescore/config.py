"""Aggregate engine configuration: every tunable in one place.

Defaults reproduce the trained system. A config round-trips through JSON,
and `resolved_hash` fingerprints the fully-resolved values so scoring runs
can state exactly which knobs they ran under.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .accuracy import KernelConfig
from .geneval import DEFAULT_DIM, DEFAULT_N_DIVERSE, DEFAULT_THEMES
from .grpo import DEFAULT_BETA, DEFAULT_EPSILON, DEFAULT_GROUP_SIZE
from .shaping import ShapingConfig


@dataclass(frozen=True)
class CurriculumConfig:
    alpha_start: float = 0.07
    alpha_target: float = 0.1
    transition_steps: int = 50
    easy_threshold: int = 3
    p1_steps: int = 100
    p2_steps: int = 500
    p3_steps: int = 1000
    stage2_steps: int = 100


@dataclass(frozen=True)
class GrpoConfig:
    epsilon: float = DEFAULT_EPSILON
    beta: float = DEFAULT_BETA
    group_size: int = DEFAULT_GROUP_SIZE

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise ValueError(f"group_size must be at least 2: {self.group_size}")


@dataclass(frozen=True)
class GenevalConfig:
    dim: int = DEFAULT_DIM
    n_diverse: int = DEFAULT_N_DIVERSE
    themes: tuple[str, ...] = DEFAULT_THEMES
    endpoint: str | None = None
    batch_size: int = 32
    max_in_flight: int = 4


@dataclass(frozen=True)
class EngineConfig:
    kernels: KernelConfig = field(default_factory=KernelConfig)
    shaping: ShapingConfig = field(default_factory=ShapingConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    geneval: GenevalConfig = field(default_factory=GenevalConfig)

    def to_json_dict(self) -> dict:
        return dataclasses.asdict(self)

    def resolved_hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


DEFAULT_CONFIG = EngineConfig()

_SECTION_TYPES = {
    "kernels": KernelConfig,
    "shaping": ShapingConfig,
    "curriculum": CurriculumConfig,
    "grpo": GrpoConfig,
    "geneval": GenevalConfig,
}


def _build_section(cls, data: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    kwargs = dict(data)
    # JSON has no tuples; coerce list-typed fields back.
    for f in dataclasses.fields(cls):
        if f.name in kwargs and isinstance(kwargs[f.name], list):
            kwargs[f.name] = tuple(kwargs[f.name])
    return cls(**kwargs)


def config_from_json_dict(data: dict) -> EngineConfig:
    """Build an EngineConfig from a decoded JSON object; omitted sections keep defaults."""
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    unknown = set(data) - set(_SECTION_TYPES)
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTION_TYPES.items():
        if name in data:
            if not isinstance(data[name], dict):
                raise ValueError(f"config section {name!r} must be an object")
            kwargs[name] = _build_section(cls, data[name])
    return EngineConfig(**kwargs)


def load_config(path: str | Path | None) -> EngineConfig:
    """Read a JSON config file; None means all defaults."""
    if path is None:
        return DEFAULT_CONFIG
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_json_dict(json.load(fh))
