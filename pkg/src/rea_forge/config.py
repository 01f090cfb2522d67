"""Run configuration: file loading, mix parsing, threshold overrides."""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .qagen import DEFAULT_PARAMS, GenParams, TaskKind, TaskMix
from .synth import SynthConfig


class ConfigError(ValueError):
    """Raised when a config file or flag value cannot be used."""


@dataclass
class RunConfig:
    """Everything a CLI run needs, after merging file values and flags."""

    n: int = 100
    seed: int = 0
    mix: Optional[TaskMix] = None
    out: Optional[Path] = None
    scene_paths: list = field(default_factory=list)
    synth: SynthConfig = field(default_factory=SynthConfig)
    scene_count: int = 1
    params: GenParams = DEFAULT_PARAMS
    threads: int = 1

    def effective_dict(self) -> dict:
        mix = self.mix if self.mix is not None else TaskMix.default()
        return {
            "n": self.n,
            "seed": self.seed,
            "mix": {task.value: mix.fractions[task] for task in TaskKind},
            "out": str(self.out) if self.out is not None else None,
            "scene_paths": [str(p) for p in self.scene_paths],
            "synth": self.synth.to_dict(),
            "scene_count": self.scene_count,
            "thresholds": self.params.to_dict(),
            "threads": self.threads,
        }


def parse_mix(text: str) -> TaskMix:
    """Parse "task=frac,task=frac" into a TaskMix.

    Keys must be task names; fractions must sum to 1.
    """
    valid = {task.value: task for task in TaskKind}
    fractions = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"mix entry {part!r} is not task=fraction")
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in valid:
            raise ConfigError(
                f"unknown task {key!r}; choose from {sorted(valid)}")
        if valid[key] in fractions:
            raise ConfigError(f"task {key!r} listed twice")
        try:
            fractions[valid[key]] = float(value)
        except ValueError:
            raise ConfigError(f"bad fraction {value!r} for task {key!r}") from None
    if not fractions:
        raise ConfigError("empty mix")
    try:
        return TaskMix(fractions)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


_THRESHOLD_KEYS = ("trend_threshold", "closer_margin", "nav_threshold",
                   "min_action_gap")


def _params_from_dict(data: dict) -> GenParams:
    unknown = set(data) - set(_THRESHOLD_KEYS)
    if unknown:
        raise ConfigError(f"unknown threshold keys: {sorted(unknown)}")
    cleaned = {}
    for key, value in data.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"threshold {key!r} must be a number")
        if value < 0:
            raise ConfigError(f"threshold {key!r} must be non-negative")
        cleaned[key] = float(value)
    return replace(DEFAULT_PARAMS, **cleaned)


def _synth_from_dict(data: dict) -> SynthConfig:
    allowed = {"room_width", "room_depth", "wall_height", "furniture_count",
               "action_count", "walk_speed", "point_density", "seed"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown synth keys: {sorted(unknown)}")
    try:
        return SynthConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad synth config: {exc}") from None


def load_config(path) -> RunConfig:
    """Read a TOML or JSON config file into a RunConfig.

    Format is chosen by suffix; anything not ending in .json parses as TOML.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(raw.decode("utf-8"))
        else:
            data = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError,
            tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    return config_from_dict(data, base_dir=path.parent)


def config_from_dict(data: dict, base_dir: Optional[Path] = None) -> RunConfig:
    allowed = {"n", "seed", "mix", "out", "scenes", "scene_count",
               "thresholds", "synth", "threads"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig()

    def _resolve(value) -> Path:
        p = Path(value)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return p

    if "n" in data:
        if not isinstance(data["n"], int) or data["n"] < 0:
            raise ConfigError("n must be a non-negative integer")
        cfg.n = data["n"]
    if "seed" in data:
        if not isinstance(data["seed"], int):
            raise ConfigError("seed must be an integer")
        cfg.seed = data["seed"]
    if "mix" in data:
        mix = data["mix"]
        if isinstance(mix, str):
            cfg.mix = parse_mix(mix)
        elif isinstance(mix, dict):
            valid = {task.value: task for task in TaskKind}
            unknown = set(mix) - set(valid)
            if unknown:
                raise ConfigError(f"unknown tasks in mix: {sorted(unknown)}")
            try:
                cfg.mix = TaskMix({valid[k]: float(v) for k, v in mix.items()})
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad mix: {exc}") from None
        else:
            raise ConfigError("mix must be a string or table")
    if "out" in data:
        cfg.out = _resolve(data["out"])
    if "scenes" in data:
        if not isinstance(data["scenes"], list):
            raise ConfigError("scenes must be a list of paths")
        cfg.scene_paths = [_resolve(p) for p in data["scenes"]]
    if "scene_count" in data:
        if not isinstance(data["scene_count"], int) or data["scene_count"] < 1:
            raise ConfigError("scene_count must be a positive integer")
        cfg.scene_count = data["scene_count"]
    if "thresholds" in data:
        if not isinstance(data["thresholds"], dict):
            raise ConfigError("thresholds must be a table")
        cfg.params = _params_from_dict(data["thresholds"])
    if "synth" in data:
        if not isinstance(data["synth"], dict):
            raise ConfigError("synth must be a table")
        cfg.synth = _synth_from_dict(data["synth"])
    if "threads" in data:
        if not isinstance(data["threads"], int) or data["threads"] < 1:
            raise ConfigError("threads must be a positive integer")
        cfg.threads = data["threads"]
    return cfg
