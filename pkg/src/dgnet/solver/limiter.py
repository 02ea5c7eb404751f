"""Smooth vertex-based slope limiter S.

For each element, component and node j with deviation d_j = u_j − ū from the
element mean, the admissible increase a_j is Δmax = max(stencil means) − ū if
d_j > 0 and Δmin = ū − min(stencil means) otherwise. The nodal factor is the
smoothed ratio

    y_j = (a_j |d_j| + ε) / (d_j² + ε),    ε = ε_lim · scale² + 1e-30,

which tends to a_j/|d_j| for |d_j| ≫ √ε and to 1 as d_j → 0. The element
factor σ = min_j min(1, y_j) scales the deviations: S(u) = ū + σ (u − ū).
Elements with σ = 1 are returned untouched. The stencil of an element is every
element sharing one of its vertices (with periodic identification).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import jax.numpy as jnp

from dgnet.dg.operators import DGOperators
from dgnet.mesh.connectivity import Connectivity

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LimiterConfig:
    enabled: bool
    stencils: jnp.ndarray  # (K, S), padded with the element itself
    mean_weights: jnp.ndarray
    eps: float = 1e-10


def build_limiter(ops: DGOperators, conn: Connectivity, enabled: bool = True, eps: float = 1e-10) -> LimiterConfig:
    """Precompute vertex-neighborhood stencils for the limiter."""
    if eps <= 0:
        raise ValueError("limiter eps must be positive")
    if enabled and ops.N > 1:
        logger.warning("Slope limiter enabled with N=%d; it is designed for N=1", ops.N)
    return LimiterConfig(
        enabled=enabled,
        stencils=jnp.asarray(conn.stencil_table()),
        mean_weights=ops.mean_weights,
        eps=eps,
    )


def limiter_factor(u, cfg: LimiterConfig):
    """Element means (K, m) and limiting factors σ in [0, 1] (K, m)."""
    means = jnp.einsum("n,knm->km", cfg.mean_weights, u)
    neighborhood = means[cfg.stencils]  # (K, S, m)
    delta_max = neighborhood.max(axis=1) - means
    delta_min = means - neighborhood.min(axis=1)
    scale = jnp.abs(neighborhood).max(axis=1)
    eps = cfg.eps * scale**2 + 1e-30

    d = u - means[:, None, :]
    a = jnp.where(d > 0, delta_max[:, None, :], delta_min[:, None, :])
    b = jnp.abs(d)
    y = (a * b + eps[:, None, :]) / (b * b + eps[:, None, :])
    sigma = jnp.minimum(1.0, y).min(axis=1)
    return means, sigma


def apply_limiter(u, cfg: LimiterConfig | None):
    """S(u); identity when cfg is None or disabled. Element means are preserved."""
    if cfg is None or not cfg.enabled:
        return u
    means, sigma = limiter_factor(u, cfg)
    limited = means[:, None, :] + sigma[:, None, :] * (u - means[:, None, :])
    return jnp.where(sigma[:, None, :] >= 1.0, u, limited)
