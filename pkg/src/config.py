"""Numerical settings loaded from YAML."""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml

from .errors import ParameterError

logger = logging.getLogger(__name__)

DEFAULTS_PATH = Path(__file__).parent.parent / "config" / "defaults.yaml"

_SWEEP_KEYS = {"c_min", "c_max", "c_step"}


@dataclass(frozen=True)
class Settings:
    tol: float = 1e-6
    max_iter: int = 10_000
    delta: float = 0.5
    walk_summable_tol: float = 1e-9
    power_tol: float = 1e-12
    power_max_iter: int = 100_000
    r_max: float = 1024.0
    error_norm_max_n: int = 500
    c_min: float = -3.0
    c_max: float = 3.0
    c_step: float = 0.1
    chord_p: Tuple[float, ...] = (0.3, 0.398, 0.4)

    def __post_init__(self) -> None:
        if not self.tol > 0.0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ParameterError(f"max_iter must be at least 1, got {self.max_iter}")
        if not 0.0 < self.delta < 1.0:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.r_max >= 1.0:
            raise ParameterError(f"r_max must be at least 1, got {self.r_max}")

    def override(self, **changes: Any) -> "Settings":
        """Copy with the non-None ``changes`` applied."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def _flatten(raw: Dict[str, Any], source: Union[str, Path]) -> Dict[str, Any]:
    known = {f.name for f in fields(Settings)}
    values: Dict[str, Any] = {}
    for key, value in raw.items():
        if key == "sweep":
            if not isinstance(value, dict):
                raise ParameterError(f"{source}: 'sweep' must be a mapping")
            unknown = set(value) - _SWEEP_KEYS
            if unknown:
                raise ParameterError(
                    f"{source}: unknown sweep keys {sorted(unknown)}"
                )
            values.update(value)
        elif key in known:
            values[key] = value
        else:
            raise ParameterError(f"{source}: unknown setting '{key}'")
    if "chord_p" in values:
        values["chord_p"] = tuple(float(p) for p in values["chord_p"])
    for name in ("max_iter", "power_max_iter", "error_norm_max_n"):
        if name in values:
            values[name] = int(values[name])
    for name in ("tol", "delta", "walk_summable_tol", "power_tol", "r_max",
                 "c_min", "c_max", "c_step"):
        if name in values:
            values[name] = float(values[name])
    return values


def _read(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise FileNotFoundError(f"Settings file not found: {path}")
    with open(path) as f:
        try:
            raw = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ParameterError(f"Cannot parse {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ParameterError(f"{path}: expected a mapping of settings")
    return _flatten(raw, path)


def load_settings(path: Optional[Union[str, Path]] = None) -> Settings:
    """
    Packaged defaults, overlaid with ``path`` when given.

    Args:
        path: Optional YAML file; keys it omits keep their default

    Returns:
        Validated settings
    """
    values: Dict[str, Any] = {}
    if DEFAULTS_PATH.exists():
        values.update(_read(DEFAULTS_PATH))
    if path is not None:
        values.update(_read(Path(path)))
        logger.info(f"Loaded settings from {path}")
    return Settings(**values)
