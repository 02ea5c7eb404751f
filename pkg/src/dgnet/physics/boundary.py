"""Boundary conditions imposed weakly through ghost states."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import jax.numpy as jnp

from dgnet.errors import ConfigError

BOUNDARY_KINDS = ("inflow", "outflow-free", "reflective-wall", "exact-dirichlet", "periodic-pair")

# (x (..., d), t) -> conservative state (..., m)
StateFunction = Callable[[jnp.ndarray, float], jnp.ndarray]


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    """One boundary kind bound to a tag.

    Attributes:
        kind: one of BOUNDARY_KINDS.
        state: conservative state for "inflow".
        function: state function for "exact-dirichlet".
        partner: opposite tag for "periodic-pair".
    """

    kind: str
    state: tuple[float, ...] | None = None
    function: StateFunction | None = None
    partner: str | None = None

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise ConfigError(f"unknown boundary kind {self.kind!r}, expected one of {BOUNDARY_KINDS}")
        if self.kind == "inflow" and self.state is None:
            raise ConfigError("inflow boundary needs a state")
        if self.kind == "exact-dirichlet" and self.function is None:
            raise ConfigError("exact-dirichlet boundary needs a state function")
        if self.kind == "periodic-pair" and not self.partner:
            raise ConfigError("periodic-pair boundary needs a partner tag")


@dataclass(frozen=True, eq=False)
class BoundaryConfig:
    """Map from mesh boundary tag to boundary condition."""

    conditions: dict[str, BoundaryCondition] = field(default_factory=dict)

    @property
    def periodic_pairs(self) -> tuple[tuple[str, str], ...]:
        pairs = []
        for tag, bc in sorted(self.conditions.items()):
            if bc.kind == "periodic-pair" and tag < bc.partner:
                pairs.append((tag, bc.partner))
        return tuple(pairs)

    def validate(self, mesh_tags) -> None:
        """Every mesh tag must be mapped and periodic partners must agree.

        Raises:
            ConfigError: missing tag or inconsistent periodic partner.
        """
        missing = sorted(set(mesh_tags) - set(self.conditions))
        if missing:
            raise ConfigError(f"no boundary condition for mesh tag {missing[0]!r}", path=f"boundary.{missing[0]}")
        for tag, bc in self.conditions.items():
            if bc.kind != "periodic-pair":
                continue
            other = self.conditions.get(bc.partner)
            if other is None or other.kind != "periodic-pair" or other.partner != tag:
                raise ConfigError(f"periodic partner of {tag!r} must point back at it", path=f"boundary.{tag}")


def boundary_ghost_state(bc: BoundaryCondition, interior, normal, t, x):
    """Ghost (exterior) state seen by the numerical flux on a boundary face.

    Args:
        bc: boundary condition.
        interior: interior trace (..., m).
        normal: outward unit normal (..., d).
        t: time.
        x: face point coordinates (..., d).
    """
    if bc.kind == "inflow":
        return jnp.broadcast_to(jnp.asarray(bc.state, dtype=interior.dtype), interior.shape)
    if bc.kind == "exact-dirichlet":
        return jnp.broadcast_to(bc.function(x, t).astype(interior.dtype), interior.shape)
    if bc.kind == "reflective-wall" and interior.shape[-1] >= 3:
        mom = interior[..., 1:-1]
        mom_n = jnp.sum(mom * normal, axis=-1, keepdims=True)
        mirrored = mom - 2.0 * mom_n * normal
        return jnp.concatenate([interior[..., :1], mirrored, interior[..., -1:]], axis=-1)
    # outflow-free (and walls of scalar laws): copy
    return interior
