"""The learned tangent: DG plumbing with Ψ_flux in place of the Riemann solver.

Per face node and equation the flux network sees the normalized triple
(n_1{{f_1}}, ..., n_d{{f_d}}, [[u]]) / ψ and its output is rescaled by ψ.
The optional volume network corrects the nodal flux f_{i,q} of each
direction and equation after normalization by η. One flux network and one
volume network are shared by every equation.
"""

from __future__ import annotations

import logging
from typing import Callable

import jax.numpy as jnp
import numpy as np

from dgnet.dg.operators import DGOperators
from dgnet.dg.tangent import face_states, surface_term
from dgnet.errors import ConfigError
from dgnet.physics.boundary import BoundaryConfig
from dgnet.physics.fluxes import FluxModel
from dgnet.surrogate.network import SurrogateParams, mlp_forward
from dgnet.surrogate.normalize import check_unit_range, normalize_face_triple, normalize_volume_flux

logger = logging.getLogger(__name__)

MODES = ("learned", "flux-oracle")


def face_inputs(u, ops: DGOperators, bcs: BoundaryConfig, flux_model: FluxModel, t=0.0):
    """Raw face quantities of every (element, face, node, equation).

    Returns:
        (avg, jump, u_minus, u_plus): avg (K, Nf, Ne, m, d) holds n_i{{f_i}},
        jump (K, Nf, Ne, m) holds u⁻ − u⁺.
    """
    u_minus, u_plus = face_states(u, ops, bcs, t)
    normals = ops.normals[:, :, None, :]
    f_avg = 0.5 * (flux_model.physical_flux(u_minus) + flux_model.physical_flux(u_plus))  # (..., d, m)
    avg = jnp.swapaxes(f_avg * normals[..., :, None], -1, -2)
    return avg, u_minus - u_plus, u_minus, u_plus


def _oracle_flux(avg, jump, u_minus, u_plus, normals, flux_model: FluxModel):
    lam = flux_model.max_wave_speed(u_minus, u_plus, normals)
    return avg.sum(axis=-1) + 0.5 * lam[..., None] * jump


def learned_face_flux(u, params: SurrogateParams, ops: DGOperators, bcs: BoundaryConfig, flux_model: FluxModel,
                      t=0.0, mode: str = "learned"):
    """(n·f*) at every face node, (K, Nf, Ne, m), as seen from each element."""
    avg, jump, u_minus, u_plus = face_inputs(u, ops, bcs, flux_model, t)
    triple = normalize_face_triple(avg, jump, params.spec.beta)
    if mode == "flux-oracle":
        physical = _oracle_flux(avg, jump, u_minus, u_plus, ops.normals[:, :, None, :], flux_model)
        return triple.scale * (physical / triple.scale)
    _debug_range(triple.values, "flux network")
    return triple.scale * mlp_forward(params.flux, triple.values)[..., 0]


def learned_volume_flux(u, params: SurrogateParams, flux_model: FluxModel, mode: str = "learned"):
    """Nodal volume fluxes (K, Np, d, m), corrected by Ψ_vol when it is enabled."""
    f = flux_model.physical_flux(u)
    if mode == "flux-oracle" or not params.spec.vol_enabled:
        return f
    norm = normalize_volume_flux(f, params.spec.beta, axis=1)
    # Ψ_vol acts on the Np-vector of each (element, direction, equation)
    nodal = jnp.moveaxis(norm.values, 1, -1)
    _debug_range(nodal, "volume network")
    corrected = jnp.moveaxis(mlp_forward(params.vol, nodal), -1, 1)
    return norm.scale * corrected


def dgnet_tangent(
    u,
    params: SurrogateParams,
    ops: DGOperators,
    bcs: BoundaryConfig,
    flux_model: FluxModel,
    t=0.0,
    mode: str = "learned",
):
    """Surrogate tangent Ψ(u) with the same collocation integration as dg_tangent.

    Args:
        u: nodal conservative values (K, Np, m).
        params: surrogate parameters matching (d, Np).
        ops: collocation operators.
        bcs: boundary conditions; ghost states enter the face triple.
        flux_model: physical flux of the equations (the numerical flux is unused).
        t: time.
        mode: "learned" or "flux-oracle" (exact LF through the same plumbing).

    Raises:
        ConfigError: unknown mode, over-integration operators or a spec mismatch.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown surrogate mode {mode!r}, expected one of {MODES}", path="mode")
    if ops.mode != "collocation":
        raise ConfigError("the surrogate tangent needs collocation operators", path="quadrature")
    if params.spec.d != ops.dim or params.spec.n_p != ops.n_p:
        raise ConfigError(
            f"surrogate built for d={params.spec.d}, Np={params.spec.n_p}; mesh has d={ops.dim}, Np={ops.n_p}"
        )
    flux_star = learned_face_flux(u, params, ops, bcs, flux_model, t, mode)
    f = learned_volume_flux(u, params, flux_model, mode)
    volume = jnp.einsum("kdnq,kqdm->knm", ops.vol, f)
    return volume - surface_term(flux_star, ops)


def surrogate_tangent_fn(params: SurrogateParams, ops: DGOperators, bcs: BoundaryConfig, flux_model: FluxModel,
                         mode: str = "learned") -> Callable:
    """dgnet_tangent bound to fixed parameters, with the (u, t) tangent signature."""

    def tangent(u, t):
        return dgnet_tangent(u, params, ops, bcs, flux_model, t, mode)

    return tangent


def face_flux_mismatch(u, params: SurrogateParams, ops: DGOperators, bcs: BoundaryConfig, flux_model: FluxModel,
                       t=0.0) -> float:
    """max |(n·f*)⁻ + (n·f*)⁺| over interior face nodes.

    The neighbor sees the same face with −n and swapped traces, so its triple
    is the negated triple with the same ψ.
    """
    avg, jump, _, _ = face_inputs(u, ops, bcs, flux_model, t)
    triple = normalize_face_triple(avg, jump, params.spec.beta)
    own = mlp_forward(params.flux, triple.values)[..., 0]
    other = mlp_forward(params.flux, -triple.values)[..., 0]
    mismatch = jnp.abs(triple.scale * (own + other))

    interior = np.ones(ops.fmask.shape[:1], dtype=bool)[None, :].repeat(ops.K, axis=0)
    for ks, es in ops.boundary.values():
        interior[ks, es] = False
    if not interior.any():
        return 0.0
    return float(jnp.max(mismatch[jnp.asarray(interior)]))


def oracle_flux_network(scheme: str, speed: tuple[float, ...] = ()) -> Callable:
    """Exact flux as a function of normalized triples (..., d + 1) -> (...).

    Args:
        scheme: "central" (sum of averages) or "linear-advection" (central plus
            |a|/2 times the jump, |a| the Euclidean norm of the speed).
        speed: advection velocity for "linear-advection".
    """
    if scheme == "central":
        return lambda triple: triple[..., :-1].sum(axis=-1)
    if scheme == "linear-advection":
        if not speed:
            raise ConfigError("linear-advection oracle needs a speed", path="speed")
        lam = float(np.linalg.norm(speed))
        return lambda triple: triple[..., :-1].sum(axis=-1) + 0.5 * lam * triple[..., -1]
    raise ConfigError(f"no oracle flux for scheme {scheme!r}", path="scheme")


def _debug_range(x, what: str) -> None:
    from dgnet.settings import get_settings
    if get_settings().debug:
        check_unit_range(x, what)
