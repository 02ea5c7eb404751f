"""Multiplicative input noise and the training-time density clamp."""

from __future__ import annotations

import jax
import jax.numpy as jnp


def randomize(u, delta: float, key):
    """v = u + η⊙u with η ~ N(0, δ² I), drawn fresh from key.

    Zero entries of u stay zero; δ = 0 returns u unchanged.
    """
    if delta < 0:
        raise ValueError("noise level delta must be >= 0")
    if delta == 0:
        return u
    eta = delta * jax.random.normal(key, jnp.shape(u), dtype=jnp.result_type(u))
    return u + eta * u


def clamp_density(u, bounds: tuple[float, float] | None = (0.1, 50.0)):
    """Clip the density component (index 0) of u to bounds; None disables."""
    if bounds is None:
        return u
    low, high = bounds
    if not low < high:
        raise ValueError(f"density bounds must satisfy low < high, got {bounds}")
    return u.at[..., 0].set(jnp.clip(u[..., 0], low, high))
