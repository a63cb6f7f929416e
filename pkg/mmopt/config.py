# mmopt/config.py
"""
Run configuration for the mmopt command line.

A config file holds flat ``key=value`` lines; ``#`` starts a comment and
blank lines are ignored.  Command-line flags override file values.
"""

from __future__ import annotations

import dataclasses
import logging
import os
from dataclasses import dataclass
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

from .core.distributions import ValuationDistribution, parse_distribution
from .core.errors import ValidationError
from .core.learner import LearnerConfig
from .core.mechanism import UpdateModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    """
    Immutable settings shared by the subcommands.

    ``d`` and ``c`` are optional: the dimension falls back to the length of
    ``c``, then to the menu being evaluated, and ``c`` falls back to the
    center of the cube.
    """

    dist: str = "uniform"
    d: Optional[int] = None
    lam: float = 1.0
    c: Optional[Tuple[float, ...]] = None
    menu_size: int = 1024
    temp: float = 100.0
    lr: float = 1e-3
    batch: int = 32768
    steps: int = 20000
    seed: int = 0
    grid: int = 101
    out: Optional[str] = None
    n: int = 1_000_000
    log_every: int = 500

    def dimension(self, fallback: Optional[int] = None) -> int:
        if self.d is not None:
            if self.c is not None and len(self.c) != self.d:
                raise ValidationError(f"c has {len(self.c)} coordinates but d={self.d}")
            return self.d
        if self.c is not None:
            return len(self.c)
        if fallback is not None:
            return fallback
        raise ValidationError("dimension unknown: set d or c")

    def update_model(self, dim: Optional[int] = None) -> UpdateModel:
        dim = self.dimension(dim)
        c = self.c if self.c is not None else (0.5,) * dim
        if len(c) != dim:
            raise ValidationError(f"c has {len(c)} coordinates, expected {dim}")
        return UpdateModel(c=c, lam=self.lam)

    def distribution(self, dim: Optional[int] = None) -> ValuationDistribution:
        return parse_distribution(self.dist, self.dimension(dim))

    def learner_config(self, n_jobs: Optional[int] = None) -> LearnerConfig:
        dim = self.dimension()
        return LearnerConfig(
            dist=self.distribution(dim),
            upd=self.update_model(dim),
            menu_size=self.menu_size,
            temperature=self.temp,
            learning_rate=self.lr,
            batch_size=self.batch,
            steps=self.steps,
            seed=self.seed,
            log_every=self.log_every,
            eval_samples=self.n,
            n_jobs=n_jobs,
        )


def _positive_int(name: str) -> Callable[[Any], int]:
    def convert(value: Any) -> int:
        number = _to_int(name, value)
        if number < 1:
            raise ValidationError(f"{name} must be >= 1, got {number}")
        return number

    return convert


def _to_int(name: str, value: Any) -> int:
    if isinstance(value, int):
        return value
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name}: expected an integer, got {value!r}") from None
    if not number.is_integer():
        raise ValidationError(f"{name}: expected an integer, got {value!r}")
    return int(number)


def _positive_float(name: str) -> Callable[[Any], float]:
    def convert(value: Any) -> float:
        number = _to_float(name, value)
        if number <= 0:
            raise ValidationError(f"{name} must be positive, got {number}")
        return number

    return convert


def _to_float(name: str, value: Any) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name}: expected a number, got {value!r}") from None


def _unit_float(name: str) -> Callable[[Any], float]:
    def convert(value: Any) -> float:
        number = _to_float(name, value)
        if not (0.0 <= number <= 1.0):
            raise ValidationError(f"{name}={number} must lie in [0,1]")
        return number

    return convert


def _belief(value: Any) -> Tuple[float, ...]:
    if isinstance(value, str):
        parts = [tok for tok in value.replace(" ", "").split(",") if tok]
    else:
        parts = list(value)
    if not parts:
        raise ValidationError("c must list at least one coordinate")
    coords = tuple(_unit_float("c")(tok) for tok in parts)
    return coords


def _dist(value: Any) -> str:
    text = str(value).strip()
    parse_distribution(text, 1)
    return text


def _seed(value: Any) -> int:
    seed = _to_int("seed", value)
    if seed < 0:
        raise ValidationError(f"seed must be >= 0, got {seed}")
    return seed


def _grid(value: Any) -> int:
    r = _to_int("grid", value)
    if r < 2:
        raise ValidationError(f"grid must be >= 2, got {r}")
    return r


_CONVERTERS: Dict[str, Tuple[str, Callable[[Any], Any]]] = {
    "dist": ("dist", _dist),
    "d": ("d", _positive_int("d")),
    "lambda": ("lam", _unit_float("lambda")),
    "c": ("c", _belief),
    "menu_size": ("menu_size", _positive_int("menu_size")),
    "temp": ("temp", _positive_float("temp")),
    "lr": ("lr", _positive_float("lr")),
    "batch": ("batch", _positive_int("batch")),
    "steps": ("steps", _positive_int("steps")),
    "seed": ("seed", _seed),
    "grid": ("grid", _grid),
    "out": ("out", str),
    "n": ("n", _positive_int("n")),
    "log_every": ("log_every", _positive_int("log_every")),
}

CONFIG_KEYS = tuple(_CONVERTERS)


def from_mapping(values: Mapping[str, Any], base: Optional[RunConfig] = None) -> RunConfig:
    """
    Apply ``values`` (config-file keys, ``None`` meaning unset) on top of ``base``.
    """
    updates: Dict[str, Any] = {}
    for key, raw in values.items():
        if raw is None:
            continue
        if key not in _CONVERTERS:
            raise ValidationError(f"unknown config key {key!r}; known keys: {', '.join(CONFIG_KEYS)}")
        field_name, convert = _CONVERTERS[key]
        updates[field_name] = convert(raw)
    return dataclasses.replace(base or RunConfig(), **updates)


def parse_config_text(text: str, source: str = "config") -> Dict[str, str]:
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ValidationError(f"{source} line {lineno}: expected key=value, got {raw!r}")
        if key not in _CONVERTERS:
            raise ValidationError(f"{source} line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def load_config_file(path: Union[str, os.PathLike]) -> Dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from None
    values = parse_config_text(text, os.fspath(path))
    log.debug("loaded %d config values from %s", len(values), path)
    return values


def merge_config(
    file_values: Optional[Mapping[str, Any]] = None,
    flag_values: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Defaults, then file values, then flags that were actually given."""
    config = from_mapping(file_values or {})
    return from_mapping(flag_values or {}, base=config)
