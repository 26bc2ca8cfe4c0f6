"""Search configuration shared by the problem file, the engine and the CLI."""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from typing import Any, Mapping

from .errors import SchemaError


class SamplingStrategy(str, enum.Enum):
    UNIFORM = "uniform"
    LINEAR = "linear"
    SQUARE = "square"

    @property
    def power(self) -> int:
        """Exponent applied to ``L - rank`` when weighting candidates."""
        return {"uniform": 0, "linear": 1, "square": 2}[self.value]


# JSON key -> SearchConfig field
CONFIG_KEYS = {
    "population": "population_size",
    "iterations": "max_iterations",
    "strategy": "strategy",
    "seed": "seed",
    "scan_cap": "scan_cap",
    "init_attempts": "init_attempts",
    "early_stop": "early_stop",
}

EARLY_STOP_PATIENCE = 25


@dataclass(frozen=True)
class SearchConfig:
    population_size: int = 16
    max_iterations: int = 200
    strategy: SamplingStrategy = SamplingStrategy.SQUARE
    seed: int = 0
    scan_cap: int = 65536
    init_attempts: int = 100
    early_stop: bool = False

    def __post_init__(self):
        object.__setattr__(self, "strategy", SamplingStrategy(self.strategy))
        if self.population_size < 2 or self.population_size % 2:
            raise SchemaError("config.population", "population size must be an even integer >= 2")
        if self.max_iterations < 1:
            raise SchemaError("config.iterations", "iterations must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise SchemaError("config.seed", "seed must be an unsigned 64-bit integer")
        if self.scan_cap < 1:
            raise SchemaError("config.scan_cap", "scan_cap must be >= 1")
        if self.init_attempts < 0:
            raise SchemaError("config.init_attempts", "init_attempts must be >= 0")

    def with_overrides(self, **changes: Any) -> "SearchConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_json(cls, obj: Mapping[str, Any], base: "SearchConfig | None" = None) -> "SearchConfig":
        """Build a config from the ``config`` object of a problem file."""
        if not isinstance(obj, Mapping):
            raise SchemaError("config", "must be an object")
        fields = {}
        for key, value in obj.items():
            if key not in CONFIG_KEYS:
                raise SchemaError(f"config.{key}", "unknown config key")
            if key == "strategy":
                if value not in {s.value for s in SamplingStrategy}:
                    raise SchemaError("config.strategy", f"unknown strategy {value!r}")
            elif key == "early_stop":
                if not isinstance(value, bool):
                    raise SchemaError("config.early_stop", "must be true or false")
            elif not isinstance(value, int) or isinstance(value, bool):
                raise SchemaError(f"config.{key}", "must be an integer")
            fields[CONFIG_KEYS[key]] = value
        return dataclasses.replace(base or cls(), **fields)

    def to_json(self) -> dict[str, Any]:
        out = {}
        for key, attr in CONFIG_KEYS.items():
            value = getattr(self, attr)
            out[key] = value.value if isinstance(value, SamplingStrategy) else value
        return out
