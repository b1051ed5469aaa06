"""Engine configuration: defaults, file loading, override precedence.

Precedence is command-line overrides > config file > built-in defaults.
Unknown keys are rejected rather than ignored so typos cannot silently
fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .annotate import PARTICIPANT_MODES
from .errors import ConfigError

FUSION_MODES = ("promote", "slot3")
PROVIDER_KINDS = ("reference", "http")


@dataclass(frozen=True)
class EngineConfig:
    w: int = 1
    k: int = 5
    delta_t: float = 1.0
    delta_l: float = 0.0
    delta_tau: float = 0.7
    synonym_threshold: float = 0.8
    damping: float = 0.85
    tolerance: float = 1e-6
    max_iters: int = 100
    dimension: int = 256
    participant_mode: str = "mentions"
    fusion: str = "promote"
    lexicon: tuple[str, ...] = ()
    provider: str = "reference"
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "SCENEMEM_API_KEY"
    request_timeout: float = 30.0
    max_in_flight: int = 4
    index_dir: str = "index"
    cache_dir: str = "cache"

    def __post_init__(self) -> None:
        if not isinstance(self.w, int) or self.w < 0:
            raise ConfigError(f"w must be an integer >= 0, got {self.w!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError(f"k must be an integer >= 1, got {self.k!r}")
        for name in ("delta_t", "delta_l", "delta_tau"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or math.isnan(value) or value < 0:
                raise ConfigError(f"{name} must be a number >= 0, got {value!r}")
        if not -1.0 <= self.synonym_threshold <= 1.0:
            raise ConfigError(f"synonym_threshold must be in [-1, 1], got {self.synonym_threshold!r}")
        if not 0.0 < self.damping < 1.0:
            raise ConfigError(f"damping must be in (0, 1), got {self.damping!r}")
        if self.tolerance <= 0:
            raise ConfigError(f"tolerance must be > 0, got {self.tolerance!r}")
        if not isinstance(self.max_iters, int) or self.max_iters < 1:
            raise ConfigError(f"max_iters must be an integer >= 1, got {self.max_iters!r}")
        if not isinstance(self.dimension, int) or self.dimension < 1:
            raise ConfigError(f"dimension must be an integer >= 1, got {self.dimension!r}")
        if self.participant_mode not in PARTICIPANT_MODES:
            raise ConfigError(
                f"participant_mode must be one of {PARTICIPANT_MODES}, got {self.participant_mode!r}"
            )
        if self.fusion not in FUSION_MODES:
            raise ConfigError(f"fusion must be one of {FUSION_MODES}, got {self.fusion!r}")
        if self.provider not in PROVIDER_KINDS:
            raise ConfigError(f"provider must be one of {PROVIDER_KINDS}, got {self.provider!r}")
        if self.provider == "http" and not self.endpoint:
            raise ConfigError("provider 'http' requires an endpoint")
        if self.request_timeout <= 0:
            raise ConfigError(f"request_timeout must be > 0, got {self.request_timeout!r}")
        if not isinstance(self.max_in_flight, int) or self.max_in_flight < 1:
            raise ConfigError(f"max_in_flight must be an integer >= 1, got {self.max_in_flight!r}")

    @classmethod
    def field_names(cls) -> frozenset[str]:
        return frozenset(f.name for f in dataclasses.fields(cls))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EngineConfig":
        return cls.load(file_values=data)

    @classmethod
    def load(
        cls,
        file_values: Mapping[str, Any] | None = None,
        overrides: Mapping[str, Any] | None = None,
    ) -> "EngineConfig":
        values: dict[str, Any] = {}
        for layer in (file_values or {}, overrides or {}):
            unknown = sorted(set(layer) - cls.field_names())
            if unknown:
                raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
            values.update(layer)
        if "lexicon" in values:
            lexicon = values["lexicon"]
            if isinstance(lexicon, str) or not all(isinstance(x, str) for x in lexicon):
                raise ConfigError("lexicon must be a list of names")
            values["lexicon"] = tuple(lexicon)
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path, overrides: Mapping[str, Any] | None = None) -> "EngineConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        return cls.load(file_values=data, overrides=overrides)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "EngineConfig":
        return self.load(file_values=self.to_dict(), overrides=overrides)

    def to_dict(self) -> dict[str, Any]:
        data = dataclasses.asdict(self)
        data["lexicon"] = list(self.lexicon)
        return data
