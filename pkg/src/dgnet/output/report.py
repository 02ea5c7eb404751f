"""Run directories, manifests, CSV tables and markdown summaries."""

from __future__ import annotations

import hashlib
import json
import logging
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml
from jinja2 import BaseLoader, Environment, StrictUndefined

from dgnet.settings import get_settings

logger = logging.getLogger(__name__)

_jinja_env = Environment(loader=BaseLoader(), undefined=StrictUndefined)

_VERSIONED = ("dgnet", "jax", "numpy", "optax")


def run_directory(command: str, out: Path | None = None, data_dir: Path | None = None) -> Path:
    """``out`` when given, else ``<data_dir>/<command>-<timestamp>``; created if missing."""
    if out is None:
        if data_dir is None:
            data_dir = get_settings().data_dir
        timestamp = datetime.now(timezone.utc).strftime("%Y%m%d_%H%M%S")
        out = Path(data_dir) / f"{command}-{timestamp}"
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form of a config."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def package_versions() -> dict[str, str]:
    versions = {}
    for name in _VERSIONED:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_manifest(
    run_dir: Path,
    command: str,
    config: dict,
    seeds: dict | None = None,
    wall_time: float | None = None,
    extra: dict | None = None,
) -> Path:
    """Write manifest.json: command, config, its hash, seeds, versions and wall time."""
    manifest = {
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seeds": seeds or {},
        "versions": package_versions(),
        "precision": get_settings().precision,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "wall_time": wall_time,
    }
    if extra:
        manifest.update(extra)
    path = Path(run_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str), encoding="utf-8")
    logger.info("Manifest saved: %s", path)
    return path


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, int, str, np.integer, np.bool_)):
        return str(value)
    return f"{float(value):.17g}"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Comma-separated table; floats written with %.17g so reruns are byte-identical."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row of {len(row)} values for {len(header)} columns")
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_grid_csv(path: Path, grid) -> Path:
    """A 1D or 2D array as row-major CSV (one grid row per line, NaN for masked cells)."""
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    lines = [",".join(_cell(v) for v in row) for row in grid]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def render_summary(command: str, templates_dir: Path | None = None, **context) -> str:
    """Render config/reports/<command>.yaml with jinja2 (undefined variables raise)."""
    if templates_dir is None:
        templates_dir = get_settings().reports_dir
    with open(Path(templates_dir) / f"{command}.yaml") as f:
        data = yaml.safe_load(f)
    template = _jinja_env.from_string(data["template"])
    title = data.get("title", command)
    return f"# {title}\n\n" + template.render(**context).strip() + "\n"


def save_summary(run_dir: Path, command: str, /, **context) -> Path:
    path = Path(run_dir) / "summary.md"
    path.write_text(render_summary(command, **context), encoding="utf-8")
    logger.info("Summary saved: %s", path)
    return path
