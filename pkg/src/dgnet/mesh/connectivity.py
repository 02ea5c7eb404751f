"""Element/face connectivity, neighbor map, periodic pairing and the dual graph."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass

import networkx as nx
import numpy as np

from dgnet.errors import MeshError
from dgnet.mesh.parse import Mesh

logger = logging.getLogger(__name__)

_MATCH_TOL = 1e-10


def face_vertices(dim: int) -> list[list[int]]:
    """Local vertex indices of each element face, in face traversal order."""
    if dim == 1:
        return [[0], [1]]
    return [[0, 1], [1, 2], [2, 0]]


@dataclass(frozen=True)
class InteriorFace:
    """One geometric face shared by elements k and nk.

    ``flipped`` is True when the neighbor traverses the shared face in the
    opposite vertex order, so its face nodes pair with ours reversed.
    """

    k: int
    e: int
    nk: int
    ne: int
    flipped: bool
    periodic: bool = False


@dataclass(frozen=True, eq=False)
class Connectivity:
    """Neighbor tables of a conforming mesh.

    Attributes:
        interior_faces: one entry per geometric interior face (periodic pairs included).
        boundary_faces: (element, local face, tag) for every non-periodic boundary face.
        neighbor: (K, Nf) neighbor element, -1 on boundary faces.
        neighbor_face: (K, Nf) neighbor's local face id, -1 on boundary faces.
        flipped: (K, Nf) node pairing reversal flag.
        shift: (K, Nf, dim) translation mapping our face onto the neighbor's (nonzero only across periodic pairs).
        vertex_class: (Nv,) representative vertex after periodic identification.
        stencils: per element, sorted elements sharing at least one (identified) vertex, itself included.
    """

    interior_faces: list[InteriorFace]
    boundary_faces: list[tuple[int, int, str]]
    neighbor: np.ndarray
    neighbor_face: np.ndarray
    flipped: np.ndarray
    shift: np.ndarray
    vertex_class: np.ndarray
    stencils: list[np.ndarray]

    @property
    def dual_edges(self) -> list[tuple[int, int]]:
        return [(f.k, f.nk) for f in self.interior_faces]

    def stencil_table(self) -> np.ndarray:
        """Stencils as a (K, S) array, padded by repeating the element itself."""
        width = max(len(s) for s in self.stencils)
        table = np.empty((len(self.stencils), width), dtype=np.int64)
        for k, s in enumerate(self.stencils):
            table[k, : len(s)] = s
            table[k, len(s):] = k
        return table


def _check_hanging_nodes(mesh: Mesh, faces: dict[tuple[int, ...], list[tuple[int, int]]]) -> None:
    tol = _MATCH_TOL * mesh.scale
    verts = mesh.vertices
    for key, owners in faces.items():
        if len(owners) != 1:
            continue
        a, b = verts[key[0]], verts[key[1]]
        seg = b - a
        length2 = float(seg @ seg)
        t = (verts - a) @ seg / length2
        dist = np.linalg.norm(verts - a - np.outer(t, seg), axis=1)
        inside = (dist < tol) & (t > tol) & (t < 1.0 - tol)
        if inside.any():
            v = int(np.flatnonzero(inside)[0])
            raise MeshError(f"hanging node {v} on the face {key} of element {owners[0][0]}")


def build_connectivity(mesh: Mesh, periodic: tuple[tuple[str, str], ...] = ()) -> Connectivity:
    """Pair every interior face exactly once and classify boundary faces.

    Args:
        mesh: valid Mesh.
        periodic: (tag_a, tag_b) pairs whose faces are identified by translation.

    Raises:
        MeshError: a face shared by more than two elements, hanging nodes,
            untagged boundary faces, or unmatched periodic faces.
    """
    local = face_vertices(mesh.dim)
    K, Nf = mesh.K, len(local)

    faces: dict[tuple[int, ...], list[tuple[int, int]]] = defaultdict(list)
    for k, elem in enumerate(mesh.elements):
        for e, lv in enumerate(local):
            faces[tuple(sorted(int(elem[v]) for v in lv))].append((k, e))

    for key, owners in faces.items():
        if len(owners) > 2:
            raise MeshError(f"face {key} shared by {len(owners)} elements")
    if mesh.dim == 2:
        _check_hanging_nodes(mesh, faces)

    for key in mesh.boundary_tags:
        if len(faces.get(key, [])) != 1:
            raise MeshError(f"tagged face {key} is not a boundary face of the mesh")

    neighbor = np.full((K, Nf), -1, dtype=np.int64)
    neighbor_face = np.full((K, Nf), -1, dtype=np.int64)
    flipped = np.zeros((K, Nf), dtype=bool)
    shift = np.zeros((K, Nf, mesh.dim))
    interior: list[InteriorFace] = []
    boundary: dict[str, list[tuple[int, int]]] = defaultdict(list)

    def ordered(k, e):
        return [int(mesh.elements[k][v]) for v in local[e]]

    def link(k, e, nk, ne, flip, periodic_face=False, offset=None):
        neighbor[k, e], neighbor_face[k, e], flipped[k, e] = nk, ne, flip
        neighbor[nk, ne], neighbor_face[nk, ne], flipped[nk, ne] = k, e, flip
        if offset is not None:
            shift[k, e] = offset
            shift[nk, ne] = -offset
        interior.append(InteriorFace(k, e, nk, ne, flip, periodic_face))

    for key, owners in faces.items():
        if len(owners) == 2:
            (k, e), (nk, ne) = owners
            flip = mesh.dim == 2 and ordered(k, e)[0] == ordered(nk, ne)[1]
            link(k, e, nk, ne, flip)
        else:
            tag = mesh.boundary_tags.get(key)
            if tag is None:
                raise MeshError(f"untagged boundary face {key} of element {owners[0][0]}")
            boundary[tag].append(owners[0])

    identified: list[tuple[int, int]] = []
    tol = _MATCH_TOL * mesh.scale
    for tag_a, tag_b in periodic:
        side_a, side_b = boundary.pop(tag_a, []), boundary.pop(tag_b, [])
        if not side_a or len(side_a) != len(side_b):
            raise MeshError(
                f"periodic pair ({tag_a}, {tag_b}) has mismatched face counts {len(side_a)} / {len(side_b)}"
            )
        cen_a = np.array([mesh.vertices[ordered(k, e)].mean(axis=0) for k, e in side_a])
        cen_b = np.array([mesh.vertices[ordered(k, e)].mean(axis=0) for k, e in side_b])
        offset = cen_b.mean(axis=0) - cen_a.mean(axis=0)
        dist = np.linalg.norm(cen_a[:, None, :] + offset - cen_b[None, :, :], axis=2)
        match = dist.argmin(axis=1)
        if np.any(dist[np.arange(len(side_a)), match] > tol) or len(set(match.tolist())) != len(side_a):
            raise MeshError(f"periodic pair ({tag_a}, {tag_b}) faces do not match by translation")
        for (k, e), j in zip(side_a, match):
            nk, ne = side_b[j]
            va, vb = ordered(k, e), ordered(nk, ne)
            flip = mesh.dim == 2 and np.linalg.norm(mesh.vertices[va[0]] + offset - mesh.vertices[vb[1]]) < tol
            link(k, e, nk, ne, bool(flip), periodic_face=True, offset=offset)
            identified += list(zip(va, vb[::-1] if flip else vb))

    # vertex identification across periodic pairs
    graph = nx.Graph()
    graph.add_nodes_from(range(mesh.n_vertices))
    graph.add_edges_from(identified)
    vertex_class = np.empty(mesh.n_vertices, dtype=np.int64)
    for component in nx.connected_components(graph):
        rep = min(component)
        for v in component:
            vertex_class[v] = rep

    by_class: dict[int, set[int]] = defaultdict(set)
    for k, elem in enumerate(mesh.elements):
        for v in elem:
            by_class[int(vertex_class[v])].add(k)
    stencils = [
        np.array(sorted(set().union(*(by_class[int(vertex_class[v])] for v in elem))), dtype=np.int64)
        for elem in mesh.elements
    ]

    boundary_faces = [(k, e, tag) for tag in sorted(boundary) for k, e in boundary[tag]]
    logger.debug(
        "Connectivity: %d elements, %d interior faces, %d boundary faces",
        K, len(interior), len(boundary_faces),
    )
    return Connectivity(
        interior_faces=interior,
        boundary_faces=boundary_faces,
        neighbor=neighbor,
        neighbor_face=neighbor_face,
        flipped=flipped,
        shift=shift,
        vertex_class=vertex_class,
        stencils=stencils,
    )


def dual_graph(conn: Connectivity) -> nx.MultiGraph:
    """Element adjacency graph: one node per element, one edge per interior face."""
    G = nx.MultiGraph()
    G.add_nodes_from(range(conn.neighbor.shape[0]))
    for f in conn.interior_faces:
        G.add_edge(f.k, f.nk, faces=(f.e, f.ne), periodic=f.periodic)
    return G
