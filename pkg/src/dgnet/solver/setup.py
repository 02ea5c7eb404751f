"""Assemble mesh, operators, flux, boundary conditions and limiter for a run."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property, partial
from pathlib import Path

import jax.numpy as jnp

from dgnet.dg.basis import NodalBasis, build_basis
from dgnet.dg.operators import DGOperators, build_element_operators
from dgnet.dg.tangent import dg_tangent
from dgnet.mesh.connectivity import Connectivity, build_connectivity
from dgnet.mesh.geometry import geometric_factors
from dgnet.mesh.parse import Mesh
from dgnet.physics.boundary import BoundaryConfig
from dgnet.physics.fluxes import FluxModel
from dgnet.physics.problems import Problem, boundary_config, get_problem, initial_state, problem_mesh
from dgnet.settings import get_settings
from dgnet.solver.limiter import LimiterConfig, build_limiter

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Discretization:
    """Everything needed to evaluate F(u) on one mesh at one order."""

    mesh: Mesh
    conn: Connectivity
    basis: NodalBasis
    ops: DGOperators
    flux_model: FluxModel
    bcs: BoundaryConfig
    limiter: LimiterConfig | None
    problem: Problem | None = None

    @property
    def gamma(self) -> float:
        return self.flux_model.gamma

    @property
    def state_shape(self) -> tuple[int, int, int]:
        return (self.ops.K, self.ops.n_p, self.flux_model.n_equations(self.mesh.dim))

    @cached_property
    def tangent(self):
        """F(u, t) bound to this discretization; one object per instance so jit caches hit."""
        return partial(_bound_tangent, ops=self.ops, flux_model=self.flux_model, bcs=self.bcs)

    def initial(self, member: int = 0):
        if self.problem is None:
            raise ValueError("discretization has no problem attached")
        return initial_state(self.problem.id, self.ops.x, gamma=self.gamma, member=member)

    @property
    def dtype(self):
        return self.ops.mass.dtype

    def with_mode(self, mode: str) -> Discretization:
        """Same mesh and physics with operators in another quadrature mode."""
        if mode == self.ops.mode:
            return self
        return self._rebuild(mode, self.dtype)

    def with_dtype(self, dtype) -> Discretization:
        """Same discretization with operator arrays of another dtype (float32 for single precision)."""
        if jnp.dtype(dtype) == self.dtype:
            return self
        return self._rebuild(self.ops.mode, dtype)

    def _rebuild(self, mode: str, dtype) -> Discretization:
        ops = build_element_operators(self.basis, geometric_factors(self.mesh), self.conn, mode=mode, dtype=dtype)
        limiter = None
        if self.limiter is not None:
            limiter = build_limiter(ops, self.conn, enabled=self.limiter.enabled, eps=self.limiter.eps)
        return Discretization(self.mesh, self.conn, self.basis, ops, self.flux_model, self.bcs, limiter, self.problem)


def _bound_tangent(u, t, ops, flux_model, bcs):
    return dg_tangent(u, ops, flux_model, bcs, t)


def discretize(
    mesh: Mesh,
    N: int,
    flux_model: FluxModel,
    bcs: BoundaryConfig,
    mode: str = "collocation",
    limiter: bool = False,
    limiter_eps: float | None = None,
    problem: Problem | None = None,
) -> Discretization:
    """Build connectivity, geometry, basis, operators and limiter for a mesh.

    Raises:
        ConfigError: unmapped boundary tags or bad quadrature mode.
        MeshError: non-conforming mesh or degenerate elements.
        BasisError: unsupported order.
    """
    bcs.validate(mesh.tags)
    conn = build_connectivity(mesh, periodic=bcs.periodic_pairs)
    geom = geometric_factors(mesh)
    basis = build_basis(mesh.dim, N)
    ops = build_element_operators(basis, geom, conn, mode=mode)
    eps = get_settings().solver.limiter_eps if limiter_eps is None else limiter_eps
    lim = build_limiter(ops, conn, enabled=limiter, eps=eps) if limiter else None
    logger.debug("Discretized K=%d, N=%d, mode=%s, limiter=%s", mesh.K, N, mode, limiter)
    return Discretization(mesh, conn, basis, ops, flux_model, bcs, lim, problem)


def discretize_problem(
    problem_id: str,
    N: int | None = None,
    mode: str | None = None,
    gamma: float | None = None,
    flux: str | None = None,
    mesh_path: Path | None = None,
    K: int | None = None,
    level: int = 0,
    limiter: bool | None = None,
) -> Discretization:
    """Discretization of a catalog problem with optional overrides.

    Unset arguments fall back to the catalog entry, then to settings.solver.
    """
    problem = get_problem(problem_id)
    settings = get_settings()
    gamma = problem.gamma if gamma is None else gamma
    N = problem.order if N is None else N
    mode = settings.solver.quadrature if mode is None else mode
    flux_model = FluxModel(scheme=flux or settings.solver.flux, gamma=gamma)
    mesh = problem_mesh(problem, mesh_path=mesh_path, K=K, level=level)
    bcs = boundary_config(problem, gamma)
    return discretize(
        mesh,
        N,
        flux_model,
        bcs,
        mode=mode,
        limiter=problem.limiter if limiter is None else limiter,
        problem=problem,
    )


def constant_state(disc: Discretization, state) -> jnp.ndarray:
    """Broadcast one conservative state to every node."""
    return jnp.broadcast_to(jnp.asarray(state, dtype=jnp.float64), disc.state_shape)
