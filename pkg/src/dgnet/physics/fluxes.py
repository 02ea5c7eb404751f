"""Numerical flux models: local Lax-Friedrichs, HLL (Davis bounds) and linear advection."""

from __future__ import annotations

from dataclasses import dataclass

import jax.numpy as jnp

from dgnet.errors import ConfigError
from dgnet.physics import euler

SCHEMES = ("lax-friedrichs", "hll", "linear-advection")


@dataclass(frozen=True)
class FluxModel:
    """Physical and numerical flux of one conservation law.

    Args:
        scheme: one of SCHEMES.
        gamma: ratio of specific heats (Euler schemes).
        speed: advection velocity (linear-advection only, one entry per dimension).
    """

    scheme: str = "lax-friedrichs"
    gamma: float = 1.4
    speed: tuple[float, ...] = ()

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown flux scheme {self.scheme!r}, expected one of {SCHEMES}", path="flux")
        if self.scheme == "linear-advection" and not self.speed:
            raise ConfigError("linear-advection needs an advection speed", path="flux.speed")

    @property
    def is_euler(self) -> bool:
        return self.scheme != "linear-advection"

    def n_equations(self, dim: int) -> int:
        return dim + 2 if self.is_euler else 1

    def physical_flux(self, u):
        """Flux tensor (..., d, m)."""
        if self.is_euler:
            return euler.euler_flux(u, self.gamma)
        a = jnp.asarray(self.speed, dtype=u.dtype)
        return a[:, None] * u[..., None, :]

    def normal_flux(self, u, normal):
        return jnp.einsum("...d,...dm->...m", normal, self.physical_flux(u))

    def max_wave_speed(self, u_minus, u_plus, normal):
        if self.is_euler:
            return euler.max_wave_speed(u_minus, u_plus, normal, self.gamma)
        a = jnp.asarray(self.speed, dtype=normal.dtype)
        return jnp.broadcast_to(jnp.abs(normal @ a), u_minus.shape[:-1])

    def is_valid(self, u):
        if self.is_euler:
            return euler.is_physical(u, self.gamma)
        return jnp.all(jnp.isfinite(u), axis=-1)

    def numerical_flux(self, u_minus, u_plus, normal):
        """n · f*(u⁻, u⁺) with n the outward normal of the minus side, shape (..., m)."""
        f_minus = self.normal_flux(u_minus, normal)
        f_plus = self.normal_flux(u_plus, normal)
        if self.scheme == "hll":
            return _hll(u_minus, u_plus, f_minus, f_plus, normal, self.gamma)
        lam = self.max_wave_speed(u_minus, u_plus, normal)
        return 0.5 * (f_minus + f_plus) + 0.5 * lam[..., None] * (u_minus - u_plus)

    def scaled(self, alpha: float) -> FluxModel:
        """Linear-advection model with flux alpha * f."""
        if self.is_euler:
            raise ConfigError("only linear-advection fluxes can be scaled")
        return FluxModel(scheme=self.scheme, gamma=self.gamma, speed=tuple(alpha * a for a in self.speed))


def _hll(u_minus, u_plus, f_minus, f_plus, normal, gamma):
    vn_minus = jnp.sum(euler.velocity(u_minus) * normal, axis=-1)
    vn_plus = jnp.sum(euler.velocity(u_plus) * normal, axis=-1)
    c_minus, c_plus = euler.sound_speed(u_minus, gamma), euler.sound_speed(u_plus, gamma)
    s_left = jnp.minimum(vn_minus - c_minus, vn_plus - c_plus)[..., None]
    s_right = jnp.maximum(vn_minus + c_minus, vn_plus + c_plus)[..., None]
    middle = (s_right * f_minus - s_left * f_plus + s_left * s_right * (u_plus - u_minus)) / (s_right - s_left)
    return jnp.where(s_left >= 0, f_minus, jnp.where(s_right <= 0, f_plus, middle))


def numerical_flux(scheme: str, u_minus, u_plus, normal, gamma: float = 1.4):
    """Functional form of FluxModel.numerical_flux for Euler schemes."""
    return FluxModel(scheme=scheme, gamma=gamma).numerical_flux(u_minus, u_plus, normal)
