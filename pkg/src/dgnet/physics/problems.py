"""Problem catalog: initial states, exact solutions, default meshes and boundary conditions."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial

import jax.numpy as jnp
import numpy as np
import yaml

from dgnet.errors import ConfigError
from dgnet.mesh.parse import Mesh, load_mesh, parse_mesh, split_tag
from dgnet.physics.boundary import BoundaryCondition, BoundaryConfig
from dgnet.physics.euler import primitive_to_conservative
from dgnet.settings import get_settings

logger = logging.getLogger(__name__)

VORTEX_BETA = 5.0
VORTEX_CENTER = (5.0, 0.0)

_catalog_cache: dict | None = None


def _load_catalog(catalog_dict: dict | None = None) -> dict:
    """Load the catalog from problems.yaml or use the provided dict."""
    global _catalog_cache
    if catalog_dict is not None:
        return catalog_dict
    if _catalog_cache is not None:
        return _catalog_cache
    path = get_settings().problems_path
    if not path.exists():
        raise ConfigError(f"problem catalog not found: {path}")
    with open(path) as f:
        _catalog_cache = (yaml.safe_load(f) or {}).get("problems", {})
    return _catalog_cache


def reset_catalog_cache() -> None:
    """Clear the catalog cache (for tests)."""
    global _catalog_cache
    _catalog_cache = None


def problem_ids() -> list[str]:
    return sorted(_load_catalog())


@dataclass(frozen=True, eq=False)
class Problem:
    id: str
    dim: int
    kind: str
    gamma: float
    spec: dict

    def get(self, key: str, default=None):
        return self.spec.get(key, default)

    @property
    def t_train(self) -> float:
        return float(self.spec["t_train"])

    @property
    def t_test(self) -> float:
        return float(self.spec.get("t_test", self.spec["t_train"]))

    @property
    def dt(self) -> float:
        return float(self.spec["dt"])

    @property
    def order(self) -> int:
        return int(self.spec.get("order", 1))

    @property
    def limiter(self) -> bool:
        return bool(self.spec.get("limiter", False))

    @property
    def vol_enabled(self) -> bool:
        return bool(self.spec.get("vol_enabled", False))

    @property
    def n_members(self) -> int:
        return len(self.spec.get("members", [])) or 1

    @property
    def train_gammas(self) -> list[float]:
        return [float(g) for g in self.spec.get("train_gammas", [self.gamma])]


def get_problem(problem_id: str, catalog_dict: dict | None = None) -> Problem:
    """Look up a catalog entry.

    Raises:
        ConfigError: unknown problem id.
    """
    catalog = _load_catalog(catalog_dict)
    if problem_id not in catalog:
        raise ConfigError(f"unknown problem {problem_id!r}, known: {', '.join(sorted(catalog))}", path="problem")
    spec = catalog[problem_id]
    return Problem(id=problem_id, dim=int(spec["dim"]), kind=spec["kind"], gamma=float(spec["gamma"]), spec=spec)


# ---------------------------------------------------------------------------
# Exact fields
# ---------------------------------------------------------------------------


def vortex_exact(x, t: float, gamma: float):
    """Isentropic vortex advected with unit speed in x, as conservative state (..., 4).

    The advected center (x1 - t - 5) is used in both velocity components.
    """
    x = jnp.asarray(x)
    dx = x[..., 0] - t - VORTEX_CENTER[0]
    dy = x[..., 1] - VORTEX_CENTER[1]
    decay = jnp.exp(1.0 - (dx * dx + dy * dy))
    u = 1.0 - VORTEX_BETA * decay * dy / (2.0 * math.pi)
    v = VORTEX_BETA * decay * dx / (2.0 * math.pi)
    rho = (1.0 - (gamma - 1.0) * VORTEX_BETA**2 * decay**2 / (16.0 * gamma * math.pi**2)) ** (1.0 / (gamma - 1.0))
    p = rho**gamma
    return primitive_to_conservative(jnp.stack([rho, u, v, p], axis=-1), gamma)


def free_stream_primitive(problem: Problem, gamma: float) -> list[float]:
    """rho0 = gamma, |u0| = M, p0 = 1 (unit sound speed)."""
    mach, angle = float(problem.get("mach")), math.radians(float(problem.get("angle_deg", 0.0)))
    return [gamma, mach * math.cos(angle), mach * math.sin(angle), 1.0]


def _post_shock_primitive(problem: Problem) -> list[float]:
    speed = float(problem.get("post_shock_speed"))
    # 60-degree shock: flow behind it moves along the shock normal (cos 30, -sin 30)
    return [
        float(problem.get("post_shock_density")),
        speed * math.cos(math.pi / 6),
        -speed * math.sin(math.pi / 6),
        float(problem.get("post_shock_pressure")),
    ]


def double_mach_state(x, t: float, problem: Problem, gamma: float):
    """Pre/post-shock state split by the moving 60-degree shock line."""
    x = jnp.asarray(x)
    x0 = float(problem.get("shock_x0"))
    # Mach-10 shock at 60 degrees: x_s(y, t) = x0 + (y + 20 t) / sqrt(3)
    front = x0 + (x[..., 1] + 20.0 * t) / math.sqrt(3.0)
    post = primitive_to_conservative(jnp.asarray(_post_shock_primitive(problem)), gamma)
    pre = primitive_to_conservative(jnp.asarray(problem.get("pre_shock"), dtype=jnp.float64), gamma)
    return jnp.where((x[..., 0] < front)[..., None], post, pre)


def _named_state(problem: Problem, name: str, gamma: float) -> tuple[float, ...]:
    if name == "free-stream":
        prim = free_stream_primitive(problem, gamma)
    elif name == "post-shock":
        prim = _post_shock_primitive(problem)
    elif name == "pre-shock":
        prim = problem.get("pre_shock")
    else:
        raise ConfigError(f"unknown named state {name!r}", path=f"{problem.id}.boundary")
    return tuple(float(v) for v in np.asarray(primitive_to_conservative(jnp.asarray(prim, dtype=jnp.float64), gamma)))


def initial_state(problem_id: str, x, gamma: float | None = None, member: int = 0, catalog_dict: dict | None = None):
    """Conservative initial state at points x of shape (..., d).

    Args:
        problem_id: catalog id.
        x: coordinates.
        gamma: gas constant; the catalog default when None.
        member: family member index for ``riemann-family`` problems.

    Raises:
        ConfigError: unknown id or member.
    """
    problem = get_problem(problem_id, catalog_dict)
    gamma = problem.gamma if gamma is None else gamma
    x = jnp.asarray(x, dtype=jnp.float64)

    if problem.kind in ("riemann", "riemann-family"):
        if problem.kind == "riemann-family":
            members = problem.get("members")
            if not 0 <= member < len(members):
                raise ConfigError(f"{problem_id} has {len(members)} members, got {member}", path="member")
            left, right = members[member]["left"], members[member]["right"]
        else:
            left, right = problem.get("left"), problem.get("right")
        mask = (x[..., 0] < float(problem.get("interface", 0.5)))[..., None]
        prim = jnp.where(mask, jnp.asarray(left, dtype=x.dtype), jnp.asarray(right, dtype=x.dtype))
        return primitive_to_conservative(prim, gamma)

    if problem.kind == "quadrant":
        cx, cy = problem.get("center", [0.5, 0.5])
        q = problem.get("quadrants")
        low_x, low_y = (x[..., 0] < cx)[..., None], (x[..., 1] < cy)[..., None]
        prim = jnp.where(
            low_x,
            jnp.where(low_y, jnp.asarray(q["q1"]), jnp.asarray(q["q2"])),
            jnp.where(low_y, jnp.asarray(q["q3"]), jnp.asarray(q["q4"])),
        )
        return primitive_to_conservative(prim, gamma)

    if problem.kind == "vortex":
        return vortex_exact(x, 0.0, gamma)

    if problem.kind == "freestream":
        state = primitive_to_conservative(jnp.asarray(free_stream_primitive(problem, gamma)), gamma)
        return jnp.broadcast_to(state, x.shape[:-1] + (4,))

    if problem.kind == "double-mach":
        return double_mach_state(x, 0.0, problem, gamma)

    raise ConfigError(f"problem {problem_id!r} has unknown kind {problem.kind!r}")


# ---------------------------------------------------------------------------
# Meshes and boundary conditions
# ---------------------------------------------------------------------------


def problem_mesh(problem: Problem, mesh_path=None, K: int | None = None, level: int = 0) -> Mesh:
    """Default mesh of a problem, an explicit mesh file, or a resized generated grid.

    Args:
        problem: catalog entry.
        mesh_path: mesh file overriding the catalog mesh.
        K: element count override for uniform-1d meshes.
        level: uniform refinement level for rectangle meshes (cells doubled per level).

    Raises:
        ConfigError: the problem has no default mesh and none was given.
    """
    if mesh_path is not None:
        mesh = load_mesh(mesh_path)
    else:
        entry = problem.get("mesh")
        if entry is None:
            raise ConfigError(f"problem {problem.id!r} needs a mesh file (--mesh)", path="mesh")
        fmt, spec = entry["format"], str(entry["spec"]).split()
        if fmt == "uniform-1d" and K is not None:
            spec[2] = str(K)
        if fmt == "rectangle" and level:
            spec[4], spec[5] = str(int(spec[4]) << level), str(int(spec[5]) << level)
        mesh = parse_mesh(" ".join(spec), fmt)
    split = problem.get("split")
    if split:
        mesh = split_tag(mesh, split["tag"], split["new_tag"], float(split["x_below"]))
    return mesh


def boundary_config(problem: Problem, gamma: float | None = None) -> BoundaryConfig:
    """Bind the problem's boundary table to concrete conditions."""
    gamma = problem.gamma if gamma is None else gamma
    conditions = {}
    for tag, entry in (problem.get("boundary") or {}).items():
        if isinstance(entry, str):
            entry = {"kind": entry}
        kind = entry["kind"]
        state = function = None
        if kind == "inflow":
            state = _named_state(problem, entry.get("state", "free-stream"), gamma)
        elif kind == "exact-dirichlet":
            if problem.kind == "vortex":
                function = partial(_vortex_boundary, gamma=gamma)
            elif problem.kind == "double-mach":
                function = partial(_double_mach_boundary, problem=problem, gamma=gamma)
            else:
                raise ConfigError(f"no exact solution for problem {problem.id!r}", path=f"boundary.{tag}")
        conditions[tag] = BoundaryCondition(kind=kind, state=state, function=function, partner=entry.get("partner"))
    return BoundaryConfig(conditions=conditions)


def _vortex_boundary(x, t, gamma):
    return vortex_exact(x, t, gamma)


def _double_mach_boundary(x, t, problem, gamma):
    return double_mach_state(x, t, problem, gamma)
