"""Per-element DG operator matrices (volume V_i^k and face lifts E^{k,e})."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import jax.numpy as jnp
import numpy as np

from dgnet.dg.basis import NodalBasis
from dgnet.errors import ConfigError, MeshError
from dgnet.mesh.connectivity import Connectivity
from dgnet.mesh.geometry import ElementGeometry

logger = logging.getLogger(__name__)

QUADRATURE_MODES = ("collocation", "over-integration")

_PAIRING_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DGOperators:
    """Dense per-element operators plus the face gather tables.

    Volume and face data live on "volume points" and "face points": the nodes
    themselves in collocation mode, Gauss points in over-integration mode.

    Attributes:
        vol: (K, d, Np, Nv) volume operators V_i^k acting on fluxes at volume points.
        vol_interp: (Nv, Np) nodal -> volume points.
        lift: (K, Nf, Np, Nfp) face lifts E^{k,e} acting on n·f* at face points.
        face_interp: (Nfp, Ne) face nodal -> face points.
        mass: (K, Np, Np) physical mass matrices M^k = det(J) M̂.
        normals: (K, Nf, d) outward unit normals.
        x: (K, Np, d) node coordinates.
        face_x: (K, Nf, Nfp, d) face point coordinates.
        fmask: (Nf, Ne) face node indices.
        map_p: (K, Nf, Ne) flat (element*Np + node) index of the paired neighbor node;
            boundary faces point at themselves.
        boundary: tag -> (element indices, local face indices).
        mean_weights: (Np,) weights giving the element mean from nodal values.
    """

    dim: int
    N: int
    mode: str
    vol: jnp.ndarray
    vol_interp: jnp.ndarray
    lift: jnp.ndarray
    face_interp: jnp.ndarray
    mass: jnp.ndarray
    normals: jnp.ndarray
    x: np.ndarray
    face_x: np.ndarray
    fmask: np.ndarray
    map_p: np.ndarray
    boundary: dict[str, tuple[np.ndarray, np.ndarray]]
    mean_weights: jnp.ndarray
    det: np.ndarray
    basis: NodalBasis

    @property
    def K(self) -> int:
        return int(self.mass.shape[0])

    @property
    def n_p(self) -> int:
        return int(self.mass.shape[1])

    @property
    def n_faces(self) -> int:
        return int(self.fmask.shape[0])

    @property
    def n_e(self) -> int:
        return int(self.fmask.shape[1])


def _pairing(basis: NodalBasis, conn: Connectivity, x: np.ndarray, scale: float) -> np.ndarray:
    K, Np = x.shape[0], basis.n_p
    Nf, Ne = basis.fmask.shape
    map_p = np.empty((K, Nf, Ne), dtype=np.int64)
    for k in range(K):
        for e in range(Nf):
            nk = conn.neighbor[k, e]
            if nk < 0:
                map_p[k, e] = k * Np + basis.fmask[e]
                continue
            ne = conn.neighbor_face[k, e]
            theirs = basis.fmask[ne][::-1] if conn.flipped[k, e] else basis.fmask[ne]
            mismatch = np.abs(x[k, basis.fmask[e]] + conn.shift[k, e] - x[nk, theirs]).max()
            if mismatch > _PAIRING_TOL * max(scale, 1.0):
                raise MeshError(f"face nodes of elements {k} and {nk} do not coincide (off by {mismatch:.3e})")
            map_p[k, e] = nk * Np + theirs
    return map_p


def build_element_operators(
    basis: NodalBasis,
    geom: ElementGeometry,
    conn: Connectivity,
    mode: str = "collocation",
    dtype=jnp.float64,
) -> DGOperators:
    """Precompute V_i^k, E^{k,e} and the face pairing for every element.

    Args:
        basis: reference basis.
        geom: geometric factors of the mesh.
        conn: connectivity of the same mesh.
        mode: "collocation" (nodal quadrature) or "over-integration" (degree 2N+1 rules).
        dtype: compute dtype of the operator arrays.

    Raises:
        ConfigError: unknown mode or dimension mismatch.
        MeshError: singular mass matrix or non-coincident face nodes.
    """
    if mode not in QUADRATURE_MODES:
        raise ConfigError(f"unknown quadrature mode {mode!r}", path="quadrature")
    if basis.dim != geom.dim:
        raise ConfigError(f"basis dim {basis.dim} does not match mesh dim {geom.dim}")
    if np.any(geom.det <= 0):
        raise MeshError("singular element mass matrix (non-positive Jacobian determinant)")

    d = basis.dim
    Minv, M = basis.inv_mass, basis.mass
    if mode == "collocation":
        s_ref = np.stack([Minv @ basis.diff[a].T @ M for a in range(d)])  # (d, Np, Np)
        vol_interp = np.eye(basis.n_p)
        face_interp = np.eye(basis.n_e)
        face_weight = basis.face_mass  # (Ne, Ne)
    else:
        w = basis.quad_weights
        s_ref = np.stack([Minv @ (basis.quad_diff[a].T * w) for a in range(d)])  # (d, Np, Nq)
        vol_interp = basis.quad_interp
        face_interp = basis.face_quad_interp
        face_weight = face_interp.T * basis.face_quad_weights  # (Ne, Nfq)

    # V_i^k = sum_a dr_a/dx_i S_a
    vol = np.einsum("kai,anq->kinq", geom.inv_jacobian, s_ref)

    lift_ref = np.stack([Minv[:, basis.fmask[e]] @ face_weight for e in range(basis.n_faces)])  # (Nf, Np, Nfp)
    lift = lift_ref[None] * (geom.surface_jacobian / geom.det[:, None])[:, :, None, None]

    x = geom.to_physical(basis.nodes)
    face_nodes_x = x[:, basis.fmask, :]  # (K, Nf, Ne, d)
    face_x = np.einsum("pj,kejd->kepd", face_interp, face_nodes_x)

    scale = float(np.abs(x).max()) if x.size else 1.0
    map_p = _pairing(basis, conn, x, scale)

    boundary: dict[str, tuple[list[int], list[int]]] = {}
    for k, e, tag in conn.boundary_faces:
        ks, es = boundary.setdefault(tag, ([], []))
        ks.append(k)
        es.append(e)

    mean_weights = M.sum(axis=1) / M.sum()

    logger.debug("Built %s operators: K=%d, Np=%d, volume points=%d", mode, x.shape[0], basis.n_p, vol.shape[-1])
    return DGOperators(
        dim=d,
        N=basis.N,
        mode=mode,
        vol=jnp.asarray(vol, dtype=dtype),
        vol_interp=jnp.asarray(vol_interp, dtype=dtype),
        lift=jnp.asarray(lift, dtype=dtype),
        face_interp=jnp.asarray(face_interp, dtype=dtype),
        mass=jnp.asarray(geom.det[:, None, None] * M, dtype=dtype),
        normals=jnp.asarray(geom.normals, dtype=dtype),
        x=x,
        face_x=face_x,
        fmask=basis.fmask,
        map_p=map_p,
        boundary={tag: (np.array(ks), np.array(es)) for tag, (ks, es) in sorted(boundary.items())},
        mean_weights=jnp.asarray(mean_weights, dtype=dtype),
        det=geom.det,
        basis=basis,
    )
