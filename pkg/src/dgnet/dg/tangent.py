"""The DG spatial operator F(û) = Σ_i V_i f̂_i − Σ_e E^{k,e}(n·f̂*)."""

from __future__ import annotations

import jax
import jax.numpy as jnp
import numpy as np

from dgnet.dg.operators import DGOperators
from dgnet.errors import NonPhysicalStateError
from dgnet.physics.boundary import BoundaryConfig, boundary_ghost_state
from dgnet.physics.fluxes import FluxModel


def check_state(u, flux_model: FluxModel) -> None:
    """Raise NonPhysicalStateError naming the first invalid element.

    Skipped while tracing, where values are abstract.
    """
    if isinstance(u, jax.core.Tracer):
        return
    valid = np.asarray(flux_model.is_valid(u))
    bad = np.flatnonzero(~valid.all(axis=-1))
    if bad.size:
        raise NonPhysicalStateError("nonphysical state (rho <= 0, p <= 0 or non-finite)", element=int(bad[0]))


def face_states(u, ops: DGOperators, bcs: BoundaryConfig, t):
    """Interior and exterior traces at face points, each (K, Nf, Nfp, m).

    Exterior values come from the paired neighbor node on interior faces and
    from the boundary ghost state on boundary faces.
    """
    K, Np, m = u.shape
    u_minus = u[:, ops.fmask, :]
    u_plus = u.reshape(K * Np, m)[ops.map_p]
    u_minus = jnp.einsum("pj,kejm->kepm", ops.face_interp, u_minus)
    u_plus = jnp.einsum("pj,kejm->kepm", ops.face_interp, u_plus)

    normals = ops.normals[:, :, None, :]
    for tag, (ks, es) in ops.boundary.items():
        bc = bcs.conditions[tag]
        ghost = boundary_ghost_state(bc, u_minus[ks, es], normals[ks, es], t, ops.face_x[ks, es])
        u_plus = u_plus.at[ks, es].set(ghost)
    return u_minus, u_plus


def volume_term(u, ops: DGOperators, flux_model: FluxModel):
    """Σ_i V_i f_i with fluxes sampled at the volume points."""
    u_vol = jnp.einsum("qn,knm->kqm", ops.vol_interp, u)
    f = flux_model.physical_flux(u_vol)  # (K, Nq, d, m)
    return jnp.einsum("kdnq,kqdm->knm", ops.vol, f)


def surface_term(flux_star, ops: DGOperators):
    """Σ_e E^{k,e} (n·f*) for face-point fluxes (K, Nf, Nfp, m)."""
    return jnp.einsum("kenp,kepm->knm", ops.lift, flux_star)


def dg_tangent(u, ops: DGOperators, flux_model: FluxModel, bcs: BoundaryConfig, t=0.0, check: bool = True):
    """Tangent slope of the semi-discrete system du/dt = F(u).

    Args:
        u: nodal conservative values (K, Np, m).
        ops: element operators (either quadrature mode).
        flux_model: physical and numerical flux.
        bcs: boundary conditions for every non-periodic tag.
        t: time, passed to time-dependent boundary states.
        check: validate u before evaluation when it is concrete.

    Raises:
        NonPhysicalStateError: rho <= 0, p <= 0 or non-finite values, with the element index.
    """
    if check:
        check_state(u, flux_model)
    u_minus, u_plus = face_states(u, ops, bcs, t)
    flux_star = flux_model.numerical_flux(u_minus, u_plus, ops.normals[:, :, None, :])
    return volume_term(u, ops, flux_model) - surface_term(flux_star, ops)


def element_means(u, ops: DGOperators):
    """Quadrature mean of every element and component, (K, m)."""
    return jnp.einsum("n,knm->km", ops.mean_weights, u)


def l2_norm_squared(e, ops: DGOperators, components=None):
    """Σ_k eᵀ M^k e summed over the selected components."""
    if components is not None:
        e = e[..., jnp.asarray(components)]
    return jnp.einsum("knm,knl,klm->", e, ops.mass, e)
