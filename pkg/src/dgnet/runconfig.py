"""Per-command run configs: YAML/JSON files plus flag overrides, validated against dataclass schemas."""

from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import yaml

from dgnet.errors import ConfigError
from dgnet.training.trainer import TrainConfig


@dataclass
class SolveConfig:
    problem: str = "sod"
    engine: str = "dg"
    scheme: str = "ssp-rk2"
    N: int | None = None
    K: int | None = None
    level: int = 0
    T: float | None = None
    dt: float | None = None
    gamma: float | None = None
    flux: str | None = None
    quadrature: str | None = None
    limiter: bool | None = None
    mesh: str | None = None
    checkpoint: str | None = None
    surrogate_mode: str = "learned"
    member: int = 0
    csv: bool = True
    out: str | None = None

    def __post_init__(self):
        if self.engine not in ("dg", "dgnet"):
            raise ConfigError("engine must be dg or dgnet", path="engine")
        if self.engine == "dgnet" and not self.checkpoint and self.surrogate_mode == "learned":
            raise ConfigError("the dgnet engine needs a checkpoint", path="checkpoint")


@dataclass
class GenerateConfig:
    problem: str = "sod-family"
    gammas: list[float] | None = None
    members: list[int] | None = None
    T: float | None = None
    dt: float | None = None
    N: int | None = None
    K: int | None = None
    level: int = 0
    flux: str | None = None
    quadrature: str = "over-integration"
    mesh: str | None = None
    out: str | None = None


@dataclass
class TrainRunConfig:
    problem: str = "sod-family"
    data: list[str] = field(default_factory=list)
    gammas: list[float] | None = None
    members: list[int] | None = None
    N: int | None = None
    K: int | None = None
    level: int = 0
    mesh: str | None = None
    quadrature: str = "over-integration"
    validation_problem: str | None = None
    validation_gamma: float | None = None
    init: str | None = None
    vol_enabled: bool | None = None
    train: TrainConfig = field(default_factory=TrainConfig.from_settings)
    out: str | None = None


@dataclass
class AnalyzeConfig:
    problem: str = "sod"
    checkpoint: str | None = None
    surrogate_mode: str = "learned"
    T: float | None = None
    dt: float | None = None
    gamma: float | None = None
    N: int | None = None
    K: int | None = None
    level: int = 0
    mesh: str | None = None
    quadrature: str = "collocation"
    components: list[int] | None = None
    indicator: bool = True
    gap_iterations: int = 0
    seed: int = 0
    out: str | None = None


@dataclass
class ConvergenceConfig:
    problem: str = "vortex"
    orders: list[int] = field(default_factory=lambda: [1, 2, 3])
    levels: list[str] = field(default_factory=lambda: ["h", "h/2", "h/4"])
    T: float = 0.1
    dt: float = 0.002
    quadrature: str = "over-integration"
    component: int = 0
    out: str | None = None


@dataclass
class WaveSpeedConfig:
    checkpoint: str | None = None
    oracle: str | None = None
    speed: list[float] = field(default_factory=lambda: [1.0])
    d: int | None = None
    resolution: int = 200
    threshold: float = 1e-6
    out: str | None = None

    def __post_init__(self):
        if (self.checkpoint is None) == (self.oracle is None):
            raise ConfigError("give exactly one of checkpoint or oracle", path="checkpoint")


@dataclass
class HistogramConfig:
    problem: str = "sod"
    data: str | None = None
    delta: float = 0.0
    epochs: int = 5
    resolution: int = 200
    N: int | None = None
    K: int | None = None
    T: float | None = None
    dt: float | None = None
    seed: int = 0
    out: str | None = None


SCHEMAS: dict[str, type] = {
    "solve": SolveConfig,
    "generate-data": GenerateConfig,
    "train": TrainRunConfig,
    "analyze": AnalyzeConfig,
    "convergence": ConvergenceConfig,
    "wave-speed": WaveSpeedConfig,
    "histogram": HistogramConfig,
}


def _unwrap_optional(tp):
    origin = typing.get_origin(tp)
    if origin in (Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if len(args) == 1:
            return args[0], True
    return tp, False


def _coerce(value: Any, tp, path: str):
    tp, optional = _unwrap_optional(tp)
    if value is None:
        if optional:
            return None
        raise ConfigError("must not be null", path=path)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError("must be a mapping", path=path)
        return build(tp, value, prefix=f"{path}.")
    origin = typing.get_origin(tp)
    if origin in (list, tuple):
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        if not isinstance(value, (list, tuple)):
            raise ConfigError("must be a list", path=path)
        (item_tp,) = typing.get_args(tp)[:1] or (Any,)
        items = [_coerce(v, item_tp, f"{path}[{i}]") for i, v in enumerate(value)]
        return tuple(items) if origin is tuple else items
    if tp is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"must be a boolean, got {value!r}", path=path)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, (int, str)):
            raise ConfigError(f"must be an integer, got {value!r}", path=path)
        try:
            return int(value)
        except ValueError as exc:
            raise ConfigError(f"must be an integer, got {value!r}", path=path) from exc
    if tp is float:
        if isinstance(value, bool):
            raise ConfigError(f"must be a number, got {value!r}", path=path)
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"must be a number, got {value!r}", path=path) from exc
    if tp is str:
        if not isinstance(value, (str, Path)):
            raise ConfigError(f"must be a string, got {value!r}", path=path)
        return str(value)
    return value


def build(cls, raw: dict, prefix: str = ""):
    """Instantiate a config dataclass from a mapping, rejecting unknown keys by dotted path.

    Raises:
        ConfigError: unknown key, wrong type or a value rejected by the dataclass.
    """
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError("unknown config key", path=f"{prefix}{key}")
    values = {key: _coerce(value, hints[key], f"{prefix}{key}") for key, value in raw.items()}
    factory = getattr(cls, "from_settings", cls)
    return factory(**values)


def _set_dotted(target: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = target.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override {dotted}: {part} is not a section", path=dotted)
        target = node
    target[parts[-1]] = value


def read_config_file(path: Path) -> dict:
    """Parse a YAML or JSON run config file into a mapping.

    Raises:
        ConfigError: missing file, parse failure or a non-mapping document.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping at the top level")
    return data


def load_run_config(command: str, path: Path | None = None, overrides: dict | None = None):
    """Config for a command: file values, then non-None flag overrides (dotted keys allowed).

    Raises:
        ConfigError: unknown command, unknown keys or invalid values.
    """
    if command not in SCHEMAS:
        raise ConfigError(f"no run config for command {command!r}")
    raw = read_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            _set_dotted(raw, key, value)
    return build(SCHEMAS[command], raw)


def to_dict(config) -> dict:
    return dataclasses.asdict(config)


def parse_level(level: str | int) -> int:
    """Refinement level of "h", "h/2", "h/4", ... (or a plain integer level).

    Raises:
        ConfigError: not a power-of-two fraction of h.
    """
    text = str(level).strip().replace(" ", "")
    if text.isdigit():
        return int(text)
    if text == "h":
        return 0
    if text.startswith("h/") and text[2:].isdigit():
        divisor = int(text[2:])
        if divisor > 0 and divisor & (divisor - 1) == 0:
            return divisor.bit_length() - 1
    raise ConfigError(f"level must be h, h/2, h/4, ... or an integer, got {level!r}", path="levels")
