"""Run configuration: built-in defaults, then ``.mqopt.yaml``, then CLI flags."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError
from .solvers import SOLVERS

CONFIG_FILENAME = ".mqopt.yaml"
REPORT_FORMATS = ("text", "json", "csv")


@dataclass(frozen=True)
class RunConfig:
    workload: str | None = None
    algorithm: str = "marginal"
    k: int | None = None
    prune: bool = True
    seed: int = 0
    report: str = "text"
    trace: bool = False
    out: str | None = None
    events: str | None = None
    exhaustive_limit: int = 22
    supermodularity_budget: int = 2000

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], base: RunConfig | None = None) -> RunConfig:
        """Overlay ``d`` on ``base``; ``None`` values leave the base untouched."""
        base = base or cls()
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

        updates: dict[str, Any] = {}
        for key, value in d.items():
            if value is None:
                continue
            updates[key] = _check(key, value)
        return replace(base, **updates)


def _check(key: str, value: Any) -> Any:
    if key in ("k", "seed", "exhaustive_limit", "supermodularity_budget"):
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ConfigError(f"{key}: expected a non-negative integer, got {value!r}")
        return value
    if key in ("prune", "trace"):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true or false, got {value!r}")
        return value
    if key == "algorithm" and value not in SOLVERS:
        raise ConfigError(f"algorithm: expected one of {', '.join(SOLVERS)}, got {value!r}")
    if key == "report" and value not in REPORT_FORMATS:
        raise ConfigError(f"report: expected one of {', '.join(REPORT_FORMATS)}, got {value!r}")
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def find_config_file(start: Path | None = None) -> Path | None:
    """Nearest ``.mqopt.yaml`` at or above ``start``."""
    p = (start or Path.cwd()).resolve()
    while True:
        candidate = p / CONFIG_FILENAME
        if candidate.is_file():
            return candidate
        if p == p.parent:
            return None
        p = p.parent


def load_config_file(path: Path) -> dict[str, Any]:
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return data


def resolve_config(cli_overrides: Mapping[str, Any], root: Path | None = None) -> RunConfig:
    # Tier 1: built-in defaults
    config = RunConfig()

    # Tier 2: project config file
    path = find_config_file(root)
    if path is not None:
        try:
            config = RunConfig.from_dict(load_config_file(path), config)
        except ConfigError as e:
            if str(e).startswith(str(path)):
                raise
            raise ConfigError(f"{path}: {e}") from e

    # Tier 3: explicit flags
    return RunConfig.from_dict(cli_overrides, config)
