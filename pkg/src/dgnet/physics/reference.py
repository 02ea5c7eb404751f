"""Exact shock-tube solutions evaluated from precomputed star states."""

from __future__ import annotations

import logging

import numpy as np
import yaml

from dgnet.errors import ConfigError
from dgnet.settings import get_settings

logger = logging.getLogger(__name__)

_reference_cache: dict | None = None


def _load_references() -> dict:
    global _reference_cache
    if _reference_cache is None:
        path = get_settings().reference_path
        if not path.exists():
            raise ConfigError(f"reference fixture not found: {path}")
        with open(path) as f:
            _reference_cache = (yaml.safe_load(f) or {}).get("references", {})
    return _reference_cache


def reset_reference_cache() -> None:
    """Clear the reference cache (for tests)."""
    global _reference_cache
    _reference_cache = None


def reference_solution(problem_id: str, x: np.ndarray, t: float) -> np.ndarray:
    """Primitive (rho, u, p) of the exact rarefaction-contact-shock solution at time t > 0.

    Raises:
        ConfigError: no fixture for the problem.
    """
    refs = _load_references()
    if problem_id not in refs:
        raise ConfigError(f"no reference solution for {problem_id!r}", path="reference")
    r = refs[problem_id]
    g = float(r["gamma"])
    rho_l, u_l, p_l = r["left"]
    rho_r, u_r, p_r = r["right"]
    p_s, u_s = r["p_star"], r["u_star"]
    c_l = np.sqrt(g * p_l / rho_l)
    c_star = c_l * (p_s / p_l) ** ((g - 1) / (2 * g))

    xi = (np.asarray(x, dtype=np.float64) - r["interface"]) / t
    head, tail = u_l - c_l, u_s - c_star

    fan_u = 2.0 / (g + 1) * (c_l + 0.5 * (g - 1) * u_l + xi)
    fan_c = 2.0 / (g + 1) * (c_l + 0.5 * (g - 1) * (u_l - xi))
    fan_rho = rho_l * (fan_c / c_l) ** (2 / (g - 1))
    fan_p = p_l * (fan_c / c_l) ** (2 * g / (g - 1))

    conditions = [xi < head, xi < tail, xi < u_s, xi < r["shock_speed"]]
    rho = np.select(conditions, [rho_l, fan_rho, r["rho_star_left"], r["rho_star_right"]], rho_r)
    u = np.select(conditions, [u_l, fan_u, u_s, u_s], u_r)
    p = np.select(conditions, [p_l, fan_p, p_s, p_s], p_r)
    return np.stack([rho, u, p], axis=-1)
