"""Affine geometric factors: Jacobians, outward normals, surface Jacobians.

Reference elements are [-1, 1] in 1D and the triangle (-1,-1), (1,-1), (-1,1)
in 2D, so det(J) = h/2 for a segment and area/2 for a triangle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dgnet.errors import MeshError
from dgnet.mesh.connectivity import face_vertices
from dgnet.mesh.parse import Mesh

_DEGENERATE_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """Per-element affine map data.

    Attributes:
        jacobian: (K, d, d), jacobian[k, a, b] = dx_a/dr_b.
        det: (K,) positive determinants.
        inv_jacobian: (K, d, d), inv_jacobian[k, b, a] = dr_b/dx_a.
        normals: (K, Nf, d) unit outward normals.
        surface_jacobian: (K, Nf) face length / reference face length (1 in 1D).
        face_lengths: (K, Nf) physical face measure (1 in 1D).
        origin: (K, d) image of the reference vertex 0.
    """

    dim: int
    jacobian: np.ndarray
    det: np.ndarray
    inv_jacobian: np.ndarray
    normals: np.ndarray
    surface_jacobian: np.ndarray
    face_lengths: np.ndarray
    origin: np.ndarray

    def to_physical(self, ref: np.ndarray) -> np.ndarray:
        """Map reference points (n, d) to physical points (K, n, d)."""
        return self.origin[:, None, :] + np.einsum("kab,nb->kna", self.jacobian, np.asarray(ref) + 1.0)


def geometric_factors(mesh: Mesh) -> ElementGeometry:
    """Compute Jacobians and face normals for every element.

    Raises:
        MeshError: degenerate element (|det J| < 1e-14 x scale^d).
    """
    v = mesh.vertices[mesh.elements]  # (K, d+1, d)
    K, d = mesh.K, mesh.dim
    origin = v[:, 0, :]
    # columns: (v_b - v_0)/2
    jacobian = 0.5 * np.transpose(v[:, 1:, :] - v[:, :1, :], (0, 2, 1))
    det = np.linalg.det(jacobian)

    bad = np.flatnonzero(np.abs(det) < _DEGENERATE_TOL * mesh.scale**d)
    if bad.size:
        raise MeshError(f"degenerate element {int(bad[0])} (|det J| = {abs(det[bad[0]]):.3e})")
    if np.any(det < 0):
        raise MeshError(f"negatively oriented element {int(np.flatnonzero(det < 0)[0])}")

    inv_jacobian = np.linalg.inv(jacobian)

    local = face_vertices(d)
    if d == 1:
        normals = np.broadcast_to(np.array([[-1.0], [1.0]]), (K, 2, 1)).copy()
        lengths = np.ones((K, 2))
        sJ = np.ones((K, 2))
    else:
        normals = np.empty((K, 3, 2))
        lengths = np.empty((K, 3))
        for e, (a, b) in enumerate(local):
            edge = v[:, b, :] - v[:, a, :]
            lengths[:, e] = np.linalg.norm(edge, axis=1)
            normals[:, e, 0] = edge[:, 1] / lengths[:, e]
            normals[:, e, 1] = -edge[:, 0] / lengths[:, e]
        # reference faces have length 2
        sJ = lengths / 2.0

    return ElementGeometry(
        dim=d,
        jacobian=jacobian,
        det=det,
        inv_jacobian=inv_jacobian,
        normals=normals,
        surface_jacobian=sJ,
        face_lengths=lengths,
        origin=origin,
    )
