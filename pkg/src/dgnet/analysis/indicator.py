"""Computable a-posteriori error indicator of a surrogate rollout.

With e_n = ‖ũⁿ − uⁿ‖, the surrogate error obeys
e_{n+1} ≤ f_{n+1} + g_n e_n, where f_{n+1} = ‖F²(ũⁿ) − Ψ²(ũⁿ)‖ is the
one-step defect of the surrogate two-stage map Ψ² against the DG map F² and
g_n the amplification of F² between the two trajectories.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from dgnet.surrogate.network import SurrogateParams

logger = logging.getLogger(__name__)


@dataclass
class IndicatorSeries:
    """f-values per step; truncated_at is the step where the DG branch failed, if any."""

    values: np.ndarray
    truncated_at: int | None = None

    @property
    def truncated(self) -> bool:
        return self.truncated_at is not None


def _norm(e, mass, components):
    e = e[..., jnp.asarray(components)]
    return jnp.sqrt(jnp.einsum("knm,knl,klm->", e, mass, e))


def _maps(model, params: SurrogateParams):
    from dgnet.training.losses import dg_stages, surrogate_stages

    def dg_map(u, t):
        return dg_stages(model, u, t)[1]

    def surrogate_map(u, t):
        return surrogate_stages(model, params, u, t)[1]

    return dg_map, surrogate_map


def error_indicator(traj, params: SurrogateParams, model, t0: float = 0.0) -> IndicatorSeries:
    """f^{i+1} = ‖F²(ũ^i) − Ψ²(ũ^i)‖_{L²} along a surrogate trajectory.

    Args:
        traj: surrogate states (n, K, Np, m).
        params: surrogate parameters that produced traj.
        model: StageModel supplying both maps; build it without the density
            clamp to match an unclamped rollout.
        t0: time of traj[0].

    Returns:
        n − 1 values, fewer when the DG branch goes nonphysical (flagged).
    """
    dg_map, surrogate_map = _maps(model, params)
    flux_model = model.dg.flux_model

    @jax.jit
    def step(u, t):
        dg = dg_map(u, t)
        return dg, _norm(dg - surrogate_map(u, t), model.mass, model.components)

    values = []
    truncated = None
    for i in range(len(traj) - 1):
        dg, f = step(jnp.asarray(traj[i]), t0 + i * model.dt)
        if not bool(jnp.all(flux_model.is_valid(dg))):
            truncated = i
            logger.warning("DG branch blew up at step %d; indicator truncated", i)
            break
        values.append(float(f))
    return IndicatorSeries(values=np.asarray(values), truncated_at=truncated)


def one_step_amplification(pred, ref, model, t0: float = 0.0) -> np.ndarray:
    """g_n = ‖F²(ũⁿ) − F²(uⁿ)‖ / ‖ũⁿ − uⁿ‖ for n = 0 .. n−2; 0 where the trajectories coincide."""
    from dgnet.training.losses import dg_stages

    @jax.jit
    def ratio(a, b, t):
        num = _norm(dg_stages(model, a, t)[1] - dg_stages(model, b, t)[1], model.mass, model.components)
        den = _norm(a - b, model.mass, model.components)
        return jnp.where(den > 0, num / jnp.where(den > 0, den, 1.0), 0.0)

    return np.asarray([
        float(ratio(jnp.asarray(pred[i]), jnp.asarray(ref[i]), t0 + i * model.dt)) for i in range(len(pred) - 1)
    ])


def accumulated_error_bound(f, g, e0: float = 0.0) -> np.ndarray:
    """b_0 = e0, b_{n+1} = g_n b_n + f_{n+1}; f and g indexed from the first step."""
    f, g = np.asarray(f, dtype=np.float64), np.asarray(g, dtype=np.float64)
    n = min(f.size, g.size)
    bound = np.empty(n + 1)
    bound[0] = e0
    for i in range(n):
        bound[i + 1] = g[i] * bound[i] + f[i]
    return bound


def trajectory_errors(pred, ref, model) -> np.ndarray:
    """e_n = ‖ũⁿ − uⁿ‖ for every step."""
    return np.asarray([float(_norm(jnp.asarray(p) - jnp.asarray(r), model.mass, model.components))
                       for p, r in zip(pred, ref)])


def jacobian_gap_estimate(u, params: SurrogateParams, model, key, iterations: int = 20, t: float = 0.0) -> float:
    """Randomized power-iteration estimate of ‖J_{F²}(u) − J_{Ψ²}(u)‖₂ in the nodal Euclidean norm.

    Approximate; intended as a diagnostic only.
    """
    dg_map, surrogate_map = _maps(model, params)
    u = jnp.asarray(u)

    def gap(w):
        return dg_map(w, t) - surrogate_map(w, t)

    _, vjp_fn = jax.vjp(gap, u)
    apply = jax.jit(lambda v: vjp_fn(jax.jvp(gap, (u,), (v,))[1])[0])

    v = jax.random.normal(key, u.shape, dtype=u.dtype)
    v = v / jnp.linalg.norm(v)
    sigma_sq = 0.0
    for _ in range(iterations):
        w = apply(v)
        sigma_sq = float(jnp.vdot(v, w))
        norm = jnp.linalg.norm(w)
        if float(norm) == 0.0:
            return 0.0
        v = w / norm
    return float(np.sqrt(max(sigma_sq, 0.0)))
