"""Configuration center: loads .env + config.default.yaml → global Settings singleton."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml
from dotenv import load_dotenv

from dgnet.errors import ConfigError

PRECISIONS = ("double", "single")


@dataclass
class SolverConfig:
    order: int = 1
    flux: str = "lax-friedrichs"
    quadrature: str = "over-integration"
    limiter_eps: float = 1e-10


@dataclass
class ImplicitDefaults:
    """Newton-GMRES defaults; the single/double pair is picked by precision."""

    newton_tol_double: float = 1e-10
    newton_tol_single: float = 1e-6
    gmres_rtol_double: float = 1e-8
    gmres_rtol_single: float = 1e-5
    restart: int = 30
    max_newton: int = 50
    jvp: str = "autodiff"


@dataclass
class TrainingDefaults:
    mode: str = "model-constrained"
    delta: float = 0.005
    # None means model-constrained term only
    alpha: float | None = None
    window: int = 10
    learning_rate: float = 1e-3
    epochs: int = 5000
    cadence: int = 10
    rho_min: float = 0.1
    rho_max: float = 50.0
    seed: int = 0
    hidden: int = 128
    init_std: float = 0.01


@dataclass
class RetryConfig:
    max_resamples: int = 3


@dataclass
class Settings:
    data_dir: Path = field(default_factory=lambda: Path("runs"))
    precision: str = "double"
    debug: bool = False
    threads: int | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    implicit: ImplicitDefaults = field(default_factory=ImplicitDefaults)
    training: TrainingDefaults = field(default_factory=TrainingDefaults)
    retry: RetryConfig = field(default_factory=RetryConfig)
    project_root: Path = field(default_factory=lambda: Path(__file__).resolve().parent.parent.parent)
    problems_path: Path = field(default=None)
    reference_path: Path = field(default=None)
    reports_dir: Path = field(default=None)

    def __post_init__(self):
        if self.problems_path is None:
            self.problems_path = self.project_root / "config" / "problems.yaml"
        if self.reference_path is None:
            self.reference_path = self.project_root / "config" / "reference.yaml"
        if self.reports_dir is None:
            self.reports_dir = self.project_root / "config" / "reports"

    @property
    def newton_tol(self) -> float:
        if self.precision == "single":
            return self.implicit.newton_tol_single
        return self.implicit.newton_tol_double

    @property
    def gmres_rtol(self) -> float:
        if self.precision == "single":
            return self.implicit.gmres_rtol_single
        return self.implicit.gmres_rtol_double


_settings: Settings | None = None


def _resolve_data_dir(raw: str, project_root: Path) -> Path:
    """Resolve data_dir: absolute path stays, relative resolves from project_root."""
    p = Path(raw)
    if p.is_absolute():
        return p
    return (project_root / p).resolve()


def _section(defaults: dict, name: str, cls):
    """Build a config dataclass from one YAML section, rejecting unknown keys."""
    raw = defaults.get(name) or {}
    known = set(cls.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown key in config.default.yaml: {unknown[0]}", path=f"{name}.{unknown[0]}")
    return cls(**raw)


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


def get_settings(project_root: Path | None = None, force_reload: bool = False) -> Settings:
    """Return the global Settings singleton, loading from .env + config.default.yaml."""
    global _settings
    if _settings is not None and not force_reload:
        return _settings

    if project_root is None:
        project_root = Path(__file__).resolve().parent.parent.parent

    env_path = project_root / ".env"
    if env_path.exists():
        load_dotenv(env_path, override=True)

    default_config_path = project_root / "config" / "config.default.yaml"
    defaults = {}
    if default_config_path.exists():
        with open(default_config_path) as f:
            defaults = yaml.safe_load(f) or {}

    precision = os.environ.get("DGNET_PRECISION", defaults.get("precision", "double")).lower()
    if precision not in PRECISIONS:
        raise ConfigError(f"precision must be one of {PRECISIONS}, got {precision!r}", path="precision")

    retry = _section(defaults, "retry", RetryConfig)
    if "DGNET_MAX_RESAMPLES" in os.environ:
        retry.max_resamples = int(os.environ["DGNET_MAX_RESAMPLES"])

    threads = os.environ.get("DGNET_THREADS", "").strip()

    data_dir = _resolve_data_dir(
        os.environ.get("DGNET_DATA_DIR", defaults.get("data_dir", "./runs")),
        project_root,
    )

    _settings = Settings(
        data_dir=data_dir,
        precision=precision,
        debug=_env_flag("DGNET_DEBUG"),
        threads=int(threads) if threads else None,
        solver=_section(defaults, "solver", SolverConfig),
        implicit=_section(defaults, "implicit", ImplicitDefaults),
        training=_section(defaults, "training", TrainingDefaults),
        retry=retry,
        project_root=project_root,
    )
    return _settings


def reset_settings() -> None:
    """Clear the singleton (used in tests)."""
    global _settings
    _settings = None
