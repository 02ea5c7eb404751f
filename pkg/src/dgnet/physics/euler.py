"""Compressible Euler algebra on conservative state arrays.

States are arrays with the conservative components on the last axis:
(rho, rho*u, E) in 1D and (rho, rho*u, rho*v, E) in 2D, so m = d + 2.
"""

from __future__ import annotations

import jax.numpy as jnp


def spatial_dim(u) -> int:
    return u.shape[-1] - 2


def velocity(u):
    return u[..., 1:-1] / u[..., :1]


def pressure(u, gamma: float):
    """p = (gamma - 1)(E - |rho u|^2 / (2 rho))."""
    rho, mom, E = u[..., 0], u[..., 1:-1], u[..., -1]
    return (gamma - 1.0) * (E - 0.5 * jnp.sum(mom * mom, axis=-1) / rho)


def sound_speed(u, gamma: float):
    return jnp.sqrt(gamma * pressure(u, gamma) / u[..., 0])


def primitive_to_conservative(w, gamma: float):
    """(rho, u[, v], p) -> (rho, rho u[, rho v], E)."""
    w = jnp.asarray(w)
    rho, vel, p = w[..., :1], w[..., 1:-1], w[..., -1:]
    E = p / (gamma - 1.0) + 0.5 * rho * jnp.sum(vel * vel, axis=-1, keepdims=True)
    return jnp.concatenate([rho, rho * vel, E], axis=-1)


def conservative_to_primitive(u, gamma: float):
    u = jnp.asarray(u)
    return jnp.concatenate([u[..., :1], velocity(u), pressure(u, gamma)[..., None]], axis=-1)


def is_physical(u, gamma: float):
    """Boolean mask over states: finite, rho > 0 and p > 0."""
    finite = jnp.all(jnp.isfinite(u), axis=-1)
    return finite & (u[..., 0] > 0) & (pressure(u, gamma) > 0)


def euler_flux(u, gamma: float):
    """Physical flux tensor, shape (..., d, m); row i is f_i(u)."""
    d = spatial_dim(u)
    rho, mom, E = u[..., 0], u[..., 1:-1], u[..., -1]
    vel = mom / rho[..., None]
    p = (gamma - 1.0) * (E - 0.5 * jnp.sum(mom * vel, axis=-1))
    momentum_flux = mom[..., :, None] * vel[..., None, :] + p[..., None, None] * jnp.eye(d, dtype=u.dtype)
    energy_flux = vel * (E + p)[..., None]
    return jnp.concatenate([mom[..., None], momentum_flux, energy_flux[..., None]], axis=-1)


def normal_flux(u, normal, gamma: float):
    """n · f(u), shape (..., m)."""
    return jnp.einsum("...d,...dm->...m", normal, euler_flux(u, gamma))


def max_wave_speed(u_minus, u_plus, normal, gamma: float):
    """lambda = max over both states of |u·n| + c."""

    def speed(u):
        return jnp.abs(jnp.sum(velocity(u) * normal, axis=-1)) + sound_speed(u, gamma)

    return jnp.maximum(speed(u_minus), speed(u_plus))
