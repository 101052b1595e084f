"""
Configuration for the pipeline: budgets, tolerances, seeds and logging.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from .error_handler import ConfigError

load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: Optional[str] = None):
    """Configure root logging from LOG_LEVEL / DEBUG."""
    if level is None:
        level = os.getenv("LOG_LEVEL", "INFO")
        if os.getenv("DEBUG", "False").lower() == "true":
            level = "DEBUG"
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT)


@dataclass
class Tolerances:
    model: float = 1e-12
    solver: float = 1e-10
    dev: float = 1e-8
    angle: float = 1e-6
    length: float = 1e-8
    margin_min: float = 1e-8
    det: float = 1e-9


def _default_threads() -> int:
    return int(os.getenv("GLU_THREADS", str(min(4, os.cpu_count() or 1))))


@dataclass
class PipelineConfig:
    quotient_budget: int = 10000
    node_cap: int = 200000
    restarts: int = 20
    word_length: int = 4
    move_cap: int = 6
    shelling_budget: int = 100000
    word_budget: int = 100000
    c: int = 2
    seed: int = 0
    threads: int = field(default_factory=_default_threads)
    mode: str = "direct"
    tolerances: Tolerances = field(default_factory=Tolerances)

    _ENV = {
        "quotient_budget": "GLU_QUOTIENT_BUDGET",
        "node_cap": "GLU_NODE_CAP",
        "restarts": "GLU_RESTARTS",
        "word_length": "GLU_WORD_LENGTH",
        "move_cap": "GLU_MOVE_CAP",
        "shelling_budget": "GLU_SHELLING_BUDGET",
        "c": "GLU_C",
        "seed": "GLU_SEED",
    }

    @classmethod
    def from_env(cls) -> "PipelineConfig":
        values: Dict[str, Any] = {}
        for name, var in cls._ENV.items():
            raw = os.getenv(var)
            if raw is not None:
                try:
                    values[name] = int(raw)
                except ValueError:
                    raise ConfigError(f"{var} must be an integer", variable=var, value=raw)
        config = cls(**values)
        config.validate()
        return config

    @classmethod
    def from_yaml(cls, path: str) -> "PipelineConfig":
        """Environment defaults overridden by a YAML file."""
        config = cls.from_env()
        with open(Path(path), 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping", path=str(path))
        return config.updated(**data)

    def updated(self, **overrides: Any) -> "PipelineConfig":
        """Copy with overrides; None values are ignored."""
        known = {f.name for f in fields(self)}
        data = asdict(self)
        tol = dict(data.pop("tolerances"))
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "tolerances":
                unknown = set(value) - set(tol)
                if unknown:
                    raise ConfigError(f"unknown tolerances: {sorted(unknown)}")
                tol.update(value)
            elif key in known:
                data[key] = value
            else:
                raise ConfigError(f"unknown config key: {key}", key=key)
        config = PipelineConfig(**data, tolerances=Tolerances(**tol))
        config.validate()
        return config

    def validate(self):
        for name in ("quotient_budget", "node_cap", "restarts", "word_length",
                     "shelling_budget", "word_budget", "c", "threads"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive", key=name, value=getattr(self, name))
        if self.move_cap < 0:
            raise ConfigError("move_cap must be non-negative", key="move_cap", value=self.move_cap)
        for name, value in asdict(self.tolerances).items():
            if value <= 0:
                raise ConfigError(f"tolerance {name} must be positive", key=name, value=value)
        if self.mode not in ("direct", "box"):
            raise ConfigError("mode must be 'direct' or 'box'", key="mode", value=self.mode)

    def to_dict(self) -> Dict[str, Any]:
        # threads never changes results, so it stays out of reports
        data = asdict(self)
        data.pop("threads")
        return data
