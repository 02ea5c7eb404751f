"""Stage-matching losses: naive (stored DG stages) and model-constrained (on-the-fly DG stages from noisy inputs).

Surrogate stages follow the SSP-RK2 recipe with the learned tangent Ψ:
ũ¹ = C(S(v + Δt Ψ(v))), ũ² = C(S(½(ũ¹ + v + Δt Ψ(ũ¹)))), where S is the
slope limiter and C the density clamp.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import jax
import jax.numpy as jnp
import numpy as np

from dgnet.dg.operators import DGOperators
from dgnet.errors import NonPhysicalStateError
from dgnet.retry import with_resample
from dgnet.solver.limiter import apply_limiter
from dgnet.solver.setup import Discretization
from dgnet.surrogate.dgnet import dgnet_tangent
from dgnet.surrogate.network import SurrogateParams
from dgnet.surrogate.normalize import compute_dtype
from dgnet.training.dataset import SnapshotDataset
from dgnet.training.randomize import clamp_density, randomize

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StageModel:
    """The DG branch and the surrogate branch over one mesh and γ.

    Attributes:
        dg: discretization evaluating the reference tangent F (any quadrature mode).
        ops: collocation operators of the same mesh for the surrogate.
        dt: time step.
        components: conservative components entering the losses.
        rho_bounds: density clamp on surrogate stages; None disables.
        surrogate_mode: "learned" or "flux-oracle".
    """

    dg: Discretization
    ops: DGOperators
    dt: float
    components: tuple[int, ...]
    rho_bounds: tuple[float, float] | None = (0.1, 50.0)
    surrogate_mode: str = "learned"

    @property
    def mass(self):
        return self.ops.mass

    @property
    def dtype(self):
        return self.ops.mass.dtype

    @cached_property
    def dg_branch(self):
        """Jitted (v, t) -> (ū¹, ū²)."""
        return jax.jit(lambda v, t: dg_stages(self, v, t))


def build_stage_model(
    disc: Discretization,
    dt: float,
    components: tuple[int, ...] | None = None,
    rho_bounds: tuple[float, float] | None = (0.1, 50.0),
    surrogate_mode: str = "learned",
    precision: str = "double",
) -> StageModel:
    """Stage model over disc; with precision "single" both branches compute in float32."""
    m = disc.state_shape[-1]
    components = tuple(range(m)) if components is None else tuple(int(c) for c in components)
    if any(not 0 <= c < m for c in components) or not components:
        raise ValueError(f"loss components {components} out of range for m={m}")
    if not disc.flux_model.is_euler:
        rho_bounds = None
    disc = disc.with_dtype(compute_dtype(precision))
    ops = disc.with_mode("collocation").ops
    return StageModel(dg=disc, ops=ops, dt=dt, components=components, rho_bounds=rho_bounds,
                      surrogate_mode=surrogate_mode)


@dataclass(frozen=True)
class Batch:
    """A window of s consecutive steps: inputs u⁰ and target stages u¹, u² (s, K, Np, m)."""

    u0: jnp.ndarray
    u1: jnp.ndarray
    u2: jnp.ndarray
    t: jnp.ndarray

    @property
    def size(self) -> int:
        return int(self.u0.shape[0])


def window_batch(dataset: SnapshotDataset, start: int, stop: int, dtype=None) -> Batch:
    """Steps start..stop-1 of dataset, cast to dtype when given."""
    if stop <= start:
        raise ValueError("empty window")
    return Batch(
        u0=jnp.asarray(dataset.states[start:stop], dtype=dtype),
        u1=jnp.asarray(dataset.stage1[start:stop], dtype=dtype),
        u2=jnp.asarray(dataset.states[start + 1:stop + 1], dtype=dtype),
        t=jnp.asarray(dataset.times[start:stop], dtype=dtype),
    )


def surrogate_stages(model: StageModel, params: SurrogateParams, v, t):
    """(ũ¹, ũ²) from input v at time t."""
    dg = model.dg
    limiter = dg.limiter

    def psi(u, time):
        return dgnet_tangent(u, params, model.ops, dg.bcs, dg.flux_model, time, model.surrogate_mode)

    u1 = clamp_density(apply_limiter(v + model.dt * psi(v, t), limiter), model.rho_bounds)
    u2 = clamp_density(apply_limiter(0.5 * (u1 + v + model.dt * psi(u1, t + model.dt)), limiter), model.rho_bounds)
    return u1, u2


def dg_stages(model: StageModel, v, t):
    """(ū¹, ū²) of the reference DG tangent from input v."""
    dg = model.dg
    u1 = apply_limiter(v + model.dt * dg.tangent(v, t), dg.limiter)
    u2 = apply_limiter(0.5 * (u1 + v + model.dt * dg.tangent(u1, t + model.dt)), dg.limiter)
    return u1, u2


def batch_l2_squared(e, mass, components):
    """Σ over snapshots, elements and components of eᵀ M^k e; e is (s, K, Np, m)."""
    e = e[..., jnp.asarray(components)]
    return jnp.einsum("sknm,knl,sklm->", e, mass, e)


def _surrogate_batch(model: StageModel, params: SurrogateParams, v, t):
    return jax.vmap(lambda vi, ti: surrogate_stages(model, params, vi, ti))(v, t)


def loss_naive(model: StageModel, params: SurrogateParams, batch: Batch):
    """Σ_i ‖u^{i,1} − ũ^{i,1}‖² + ‖u^{i,2} − ũ^{i,2}‖² with ũ from the clean u^{i,0}.

    Raises:
        ValueError: empty batch.
    """
    if batch.size == 0:
        raise ValueError("empty window")
    u1, u2 = _surrogate_batch(model, params, batch.u0, batch.t)
    return batch_l2_squared(batch.u1 - u1, model.mass, model.components) + batch_l2_squared(
        batch.u2 - u2, model.mass, model.components
    )


@dataclass(frozen=True)
class MCTargets:
    """Noisy inputs v and the DG stages started from them, for the snapshots kept."""

    v: jnp.ndarray
    u1: jnp.ndarray
    u2: jnp.ndarray
    t: jnp.ndarray
    kept: tuple[int, ...]

    @property
    def size(self) -> int:
        return int(self.v.shape[0])


def prepare_mc_batch(model: StageModel, batch: Batch, delta: float, key) -> MCTargets:
    """Draw one noise realization per snapshot and run the DG branch on it.

    A snapshot whose DG branch becomes nonphysical is redrawn up to
    settings.retry.max_resamples times and skipped after that.

    Raises:
        ValueError: empty batch.
        NonPhysicalStateError: every snapshot of the window was skipped.
    """
    if batch.size == 0:
        raise ValueError("empty window")
    branch = model.dg_branch
    flux_model = model.dg.flux_model

    @with_resample
    def noisy_stages(u0, t, index, *, key):
        v = randomize(u0, delta, key)
        u1, u2 = branch(v, t)
        if not (np.all(flux_model.is_valid(u1)) and np.all(flux_model.is_valid(u2))):
            raise NonPhysicalStateError("DG branch blew up under noise", snapshot=index)
        return v, u1, u2

    keys = jax.random.split(key, batch.size)
    vs, u1s, u2s, ts, kept = [], [], [], [], []
    for i in range(batch.size):
        try:
            v, u1, u2 = noisy_stages(batch.u0[i], batch.t[i], i, key=keys[i])
        except NonPhysicalStateError as exc:
            logger.warning("Skipping snapshot %d of the window: %s", i, exc)
            continue
        vs.append(v)
        u1s.append(u1)
        u2s.append(u2)
        ts.append(batch.t[i])
        kept.append(i)
    if not kept:
        raise NonPhysicalStateError("DG branch blew up on every snapshot of the window", snapshot=0)
    return MCTargets(
        v=jnp.stack(vs),
        u1=jax.lax.stop_gradient(jnp.stack(u1s)),
        u2=jax.lax.stop_gradient(jnp.stack(u2s)),
        t=jnp.stack(ts),
        kept=tuple(kept),
    )


def mc_term(model: StageModel, params: SurrogateParams, targets: MCTargets):
    """L_mc: stage mismatch between the DG and surrogate branches from the same noisy v."""
    u1, u2 = _surrogate_batch(model, params, targets.v, targets.t)
    return batch_l2_squared(targets.u1 - u1, model.mass, model.components) + batch_l2_squared(
        targets.u2 - u2, model.mass, model.components
    )


def mc_objective(model: StageModel, params: SurrogateParams, targets: MCTargets, batch: Batch | None = None,
                 alpha: float | None = None):
    """L_mc alone when alpha is None, else L_n + α·L_mc."""
    term = mc_term(model, params, targets)
    if alpha is None:
        return term
    if batch is None:
        raise ValueError("alpha-balanced loss needs the clean batch")
    return loss_naive(model, params, batch) + alpha * term


def loss_mc(model: StageModel, params: SurrogateParams, batch: Batch, delta: float, key,
            alpha: float | None = None):
    """Model-constrained loss with a fresh noise draw per snapshot.

    Raises:
        ValueError: empty batch.
        NonPhysicalStateError: the DG branch failed on every snapshot.
    """
    targets = prepare_mc_batch(model, batch, delta, key)
    return mc_objective(model, params, targets, batch, alpha)
