"""Max-magnitude normalization of network inputs.

Every value fed to a network is divided by the largest magnitude among the
values it is grouped with, floored at β, so inputs lie in [−1, 1].
"""

from __future__ import annotations

from typing import NamedTuple

import jax
import jax.numpy as jnp
import numpy as np

BETA_DOUBLE = 1e-16
BETA_SINGLE = 1e-7


def beta_floor(precision: str = "double") -> float:
    return BETA_SINGLE if precision == "single" else BETA_DOUBLE


def compute_dtype(precision: str = "double"):
    """Array dtype of surrogate training and evaluation at a precision level."""
    return jnp.float32 if precision == "single" else jnp.float64


class NormalizedVolumeFlux(NamedTuple):
    values: jnp.ndarray  # same shape as the input flux
    scale: jnp.ndarray  # η, reduced axis kept with size 1


class NormalizedFaceTriple(NamedTuple):
    values: jnp.ndarray  # (..., d + 1): d directional averages, then the jump
    scale: jnp.ndarray  # ψ, (...)


def normalize_volume_flux(f, beta: float = BETA_DOUBLE, axis: int = 0) -> NormalizedVolumeFlux:
    """f̄ = f / η with η = max(max_l |f_l|, β) taken over the node axis.

    Args:
        f: nodal flux values; ``axis`` indexes the element nodes.
        beta: floor of η.
        axis: node axis.
    """
    f = jnp.asarray(f)
    eta = jnp.maximum(jnp.max(jnp.abs(f), axis=axis, keepdims=True), beta)
    return NormalizedVolumeFlux(values=f / eta, scale=eta)


def normalize_face_triple(avg_fluxes, jump, beta: float = BETA_DOUBLE) -> NormalizedFaceTriple:
    """Scale (n_1{{f_1}}, ..., n_d{{f_d}}, [[u]]) by ψ = max(|·|, ..., β).

    Args:
        avg_fluxes: directional averages n_i{{f_i}}, shape (..., d).
        jump: [[u]] = u⁻ − u⁺, shape (...).
        beta: floor of ψ.
    """
    raw = jnp.concatenate([jnp.asarray(avg_fluxes), jnp.asarray(jump)[..., None]], axis=-1)
    psi = jnp.maximum(jnp.max(jnp.abs(raw), axis=-1), beta)
    return NormalizedFaceTriple(values=raw / psi[..., None], scale=psi)


def check_unit_range(x, what: str, slack: float = 1e-12) -> None:
    """Raise ValueError when a concrete network input leaves [−1, 1]."""
    if isinstance(x, jax.core.Tracer):
        return
    worst = float(np.max(np.abs(np.asarray(x)))) if np.size(x) else 0.0
    if not worst <= 1.0 + slack:
        raise ValueError(f"{what} input outside [-1, 1]: max |x| = {worst:.6g}")
