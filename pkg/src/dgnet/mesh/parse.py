"""Mesh ingestion: Gmsh ASCII v2.2 subset, internal JSON, and generated grids.

Internal JSON schema (``schema: "mesh/1"``)::

    {
      "schema": "mesh/1",
      "dim": 2,
      "vertices": [[x, y], ...],
      "elements": [[v0, v1, v2], ...],
      "boundary": [{"vertices": [a, b], "tag": "wall"}, ...]
    }

In 1D, elements are ``[v0, v1]`` segments and boundary entries hold one vertex.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dgnet.errors import MeshError

logger = logging.getLogger(__name__)

MESH_SCHEMA = "mesh/1"
FORMATS = ("gmsh-ascii-v2", "internal-json", "uniform-1d", "rectangle")

# Gmsh element type -> number of nodes
_GMSH_POINT, _GMSH_LINE, _GMSH_TRIANGLE = 15, 1, 2
_GMSH_NODES = {_GMSH_POINT: 1, _GMSH_LINE: 2, _GMSH_TRIANGLE: 3}
_GMSH_NAMES = {3: "quadrangle", 4: "tetrahedron", 5: "hexahedron", 8: "line3", 9: "triangle6"}

_DEGENERATE_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class Mesh:
    """Affine simplex mesh.

    Attributes:
        dim: 1 (segments) or 2 (triangles).
        vertices: (Nv, dim) coordinates.
        elements: (K, dim+1) vertex indices, counterclockwise in 2D, left-to-right in 1D.
        boundary_tags: sorted vertex tuple of a boundary face -> tag name.
    """

    dim: int
    vertices: np.ndarray
    elements: np.ndarray
    boundary_tags: dict[tuple[int, ...], str] = field(default_factory=dict)

    @property
    def K(self) -> int:
        return int(self.elements.shape[0])

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def scale(self) -> float:
        """Bounding-box diagonal, the reference length for relative tolerances."""
        extent = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.linalg.norm(extent))

    @property
    def tags(self) -> list[str]:
        return sorted(set(self.boundary_tags.values()))


def _canonical(dim: int, vertices: np.ndarray, elements: np.ndarray, lines: list[int] | None = None) -> np.ndarray:
    """Reorder element vertices to positive orientation; reject degenerate elements."""
    elements = elements.copy()
    scale = float(np.linalg.norm(vertices.max(axis=0) - vertices.min(axis=0))) or 1.0
    for k, elem in enumerate(elements):
        where = lines[k] if lines is not None else None
        if dim == 1:
            length = vertices[elem[1], 0] - vertices[elem[0], 0]
            if abs(length) < _DEGENERATE_TOL * scale:
                raise MeshError(f"degenerate element {k} (zero length)", line=where)
            if length < 0:
                elements[k] = elem[::-1]
        else:
            p0, p1, p2 = vertices[elem]
            area = 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
            if abs(area) < _DEGENERATE_TOL * scale**2:
                raise MeshError(f"degenerate element {k} (zero area)", line=where)
            if area < 0:
                elements[k] = elem[[0, 2, 1]]
    return elements


def _build(dim, vertices, elements, boundary, lines=None) -> Mesh:
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, dim)
    elements = np.asarray(elements, dtype=np.int64).reshape(-1, dim + 1)
    if elements.size == 0:
        raise MeshError("mesh has no elements")
    if elements.min() < 0 or elements.max() >= len(vertices):
        raise MeshError("element references a vertex that does not exist")
    tags: dict[tuple[int, ...], str] = {}
    for face, tag in boundary:
        key = tuple(sorted(int(v) for v in face))
        if tags.get(key, tag) != tag:
            raise MeshError(f"boundary face {key} carries two tags: {tags[key]!r}, {tag!r}")
        tags[key] = str(tag)
    return Mesh(dim=dim, vertices=vertices, elements=_canonical(dim, vertices, elements, lines), boundary_tags=tags)


# ---------------------------------------------------------------------------
# Gmsh
# ---------------------------------------------------------------------------


def _parse_gmsh(text: str) -> Mesh:
    lines = text.splitlines()
    physical: dict[tuple[int, int], str] = {}
    nodes: dict[int, tuple[float, float, float]] = {}
    raw_elements: list[tuple[int, int, str | None, list[int]]] = []  # (line, type, tag, node ids)
    saw_format = False

    i = 0

    def next_line() -> tuple[int, str]:
        nonlocal i
        if i >= len(lines):
            raise MeshError("unexpected end of file", line=i)
        i += 1
        return i, lines[i - 1].strip()

    while i < len(lines):
        lineno, line = next_line()
        if not line:
            continue
        if not line.startswith("$"):
            raise MeshError(f"expected a section header, got {line[:40]!r}", line=lineno)
        section = line[1:]
        if section == "MeshFormat":
            lineno, line = next_line()
            parts = line.split()
            if not parts or not parts[0].startswith("2."):
                raise MeshError(f"unsupported gmsh version {parts[0] if parts else ''!r}, need 2.2", line=lineno)
            if len(parts) > 1 and parts[1] != "0":
                raise MeshError("binary gmsh files are not supported", line=lineno)
            saw_format = True
        elif section == "PhysicalNames":
            lineno, line = next_line()
            for _ in range(int(line)):
                lineno, line = next_line()
                m = re.match(r'(\d+)\s+(\d+)\s+"(.*)"', line)
                if m is None:
                    raise MeshError(f"malformed physical name {line!r}", line=lineno)
                physical[(int(m.group(1)), int(m.group(2)))] = m.group(3)
        elif section == "Nodes":
            lineno, line = next_line()
            for _ in range(int(line)):
                lineno, line = next_line()
                parts = line.split()
                try:
                    nodes[int(parts[0])] = (float(parts[1]), float(parts[2]), float(parts[3]))
                except (IndexError, ValueError) as exc:
                    raise MeshError(f"malformed node record {line!r}", line=lineno) from exc
        elif section == "Elements":
            lineno, line = next_line()
            for _ in range(int(line)):
                lineno, line = next_line()
                try:
                    parts = [int(p) for p in line.split()]
                    etype, ntags = parts[1], parts[2]
                except (IndexError, ValueError) as exc:
                    raise MeshError(f"malformed element record {line!r}", line=lineno) from exc
                if etype not in _GMSH_NODES:
                    name = _GMSH_NAMES.get(etype, f"type {etype}")
                    raise MeshError(f"unsupported element type {etype} ({name})", line=lineno)
                tag = None
                if ntags > 0:
                    edim = {_GMSH_POINT: 0, _GMSH_LINE: 1, _GMSH_TRIANGLE: 2}[etype]
                    tag = physical.get((edim, parts[3]), str(parts[3]))
                ids = parts[3 + ntags:]
                if len(ids) != _GMSH_NODES[etype]:
                    raise MeshError(f"element has {len(ids)} nodes, expected {_GMSH_NODES[etype]}", line=lineno)
                raw_elements.append((lineno, etype, tag, ids))
        else:
            # skip unknown sections
            while True:
                lineno, line = next_line()
                if line == f"$End{section}":
                    break
            continue
        lineno, line = next_line()
        if line != f"$End{section}":
            raise MeshError(f"expected $End{section}, got {line[:40]!r}", line=lineno)

    if not saw_format:
        raise MeshError("missing $MeshFormat section", line=1)

    has_triangles = any(e[1] == _GMSH_TRIANGLE for e in raw_elements)
    dim = 2 if has_triangles else 1
    cell_type = _GMSH_TRIANGLE if dim == 2 else _GMSH_LINE
    face_type = _GMSH_LINE if dim == 2 else _GMSH_POINT

    cells = [e for e in raw_elements if e[1] == cell_type]
    if not cells:
        raise MeshError("no line or triangle elements found")

    # compact to vertices referenced by cells
    used = sorted({n for _, _, _, ids in cells for n in ids})
    missing = [n for n in used if n not in nodes]
    if missing:
        raise MeshError(f"element references undefined node {missing[0]}")
    index = {n: j for j, n in enumerate(used)}
    vertices = np.array([nodes[n][:dim] for n in used])

    elements = [[index[n] for n in ids] for _, _, _, ids in cells]
    boundary = []
    for lineno, etype, tag, ids in raw_elements:
        if etype != face_type:
            continue
        if tag is None:
            raise MeshError("boundary element without a physical tag", line=lineno)
        if any(n not in index for n in ids):
            raise MeshError("boundary element references a node outside the mesh", line=lineno)
        boundary.append(([index[n] for n in ids], tag))

    logger.debug("Parsed gmsh mesh: dim=%d, %d elements, %d boundary faces", dim, len(elements), len(boundary))
    return _build(dim, vertices, elements, boundary, lines=[c[0] for c in cells])


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _parse_json(text: str) -> Mesh:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MeshError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise MeshError("mesh JSON must be an object")
    if data.get("schema") != MESH_SCHEMA:
        raise MeshError(f"unsupported mesh schema {data.get('schema')!r}, expected {MESH_SCHEMA!r}")
    try:
        dim = int(data["dim"])
        vertices = data["vertices"]
        elements = data["elements"]
        boundary = [(b["vertices"], b["tag"]) for b in data.get("boundary", [])]
    except (KeyError, TypeError) as exc:
        raise MeshError(f"missing mesh field {exc}") from exc
    if dim not in (1, 2):
        raise MeshError(f"unsupported dimension {dim}")
    if any(len(e) != dim + 1 for e in elements):
        raise MeshError(f"unsupported element type: {dim}D meshes take {dim + 1}-vertex simplices")
    return _build(dim, vertices, elements, boundary)


def mesh_to_json(mesh: Mesh) -> str:
    """Serialize a mesh to the internal JSON schema."""
    payload = {
        "schema": MESH_SCHEMA,
        "dim": mesh.dim,
        "vertices": mesh.vertices.tolist(),
        "elements": mesh.elements.tolist(),
        "boundary": [{"vertices": list(face), "tag": tag} for face, tag in sorted(mesh.boundary_tags.items())],
    }
    return json.dumps(payload, indent=1)


# ---------------------------------------------------------------------------
# Generated grids
# ---------------------------------------------------------------------------


def uniform_1d(x_min: float, x_max: float, K: int) -> Mesh:
    """K equal segments on [x_min, x_max], boundary tags ``left`` and ``right``."""
    if K < 1 or not x_max > x_min:
        raise MeshError(f"invalid uniform-1d spec ({x_min}, {x_max}, {K})")
    vertices = np.linspace(x_min, x_max, K + 1)
    elements = np.stack([np.arange(K), np.arange(1, K + 1)], axis=1)
    return _build(1, vertices, elements, [([0], "left"), ([K], "right")])


def rectangle(x0: float, x1: float, y0: float, y1: float, nx: int, ny: int) -> Mesh:
    """Structured triangulation of a rectangle, every cell split along its ``/`` diagonal.

    Boundary tags: ``bottom``, ``right``, ``top``, ``left``.
    """
    if nx < 1 or ny < 1 or not (x1 > x0 and y1 > y0):
        raise MeshError(f"invalid rectangle spec ({x0}, {x1}, {y0}, {y1}, {nx}, {ny})")
    xs, ys = np.linspace(x0, x1, nx + 1), np.linspace(y0, y1, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.stack([gx.ravel(), gy.ravel()], axis=1)

    def vid(i, j):
        return j * (nx + 1) + i

    elements = []
    for j in range(ny):
        for i in range(nx):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            elements.append([v00, v10, v11])
            elements.append([v00, v11, v01])
    boundary = []
    boundary += [([vid(i, 0), vid(i + 1, 0)], "bottom") for i in range(nx)]
    boundary += [([vid(nx, j), vid(nx, j + 1)], "right") for j in range(ny)]
    boundary += [([vid(i, ny), vid(i + 1, ny)], "top") for i in range(nx)]
    boundary += [([vid(0, j), vid(0, j + 1)], "left") for j in range(ny)]
    return _build(2, vertices, elements, boundary)


def split_tag(mesh: Mesh, tag: str, new_tag: str, x_below: float) -> Mesh:
    """Retag the faces of `tag` whose centroid lies left of x_below."""
    tags = dict(mesh.boundary_tags)
    for face, old in mesh.boundary_tags.items():
        if old == tag and mesh.vertices[list(face), 0].mean() < x_below:
            tags[face] = new_tag
    return Mesh(dim=mesh.dim, vertices=mesh.vertices, elements=mesh.elements, boundary_tags=tags)


def _numbers(text: str, count: int, fmt: str) -> list[float]:
    tokens = [t for t in re.split(r"[\s,]+", text.strip()) if t]
    if len(tokens) != count:
        raise MeshError(f"{fmt} spec needs {count} numbers, got {len(tokens)}", line=1)
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise MeshError(f"{fmt} spec: {exc}", line=1) from exc


def parse_mesh(text: str, format: str) -> Mesh:
    """Parse mesh content in one of FORMATS.

    ``uniform-1d`` content is ``"x_min x_max K"``; ``rectangle`` content is
    ``"x0 x1 y0 y1 nx ny"`` (whitespace or comma separated).

    Raises:
        MeshError: parse failure (with line number where known), unsupported
            element type, or degenerate element.
    """
    if format == "gmsh-ascii-v2":
        return _parse_gmsh(text)
    if format == "internal-json":
        return _parse_json(text)
    if format == "uniform-1d":
        x_min, x_max, K = _numbers(text, 3, format)
        return uniform_1d(x_min, x_max, int(K))
    if format == "rectangle":
        x0, x1, y0, y1, nx, ny = _numbers(text, 6, format)
        return rectangle(x0, x1, y0, y1, int(nx), int(ny))
    raise MeshError(f"unknown mesh format {format!r}, expected one of {FORMATS}")


def load_mesh(path: Path) -> Mesh:
    """Read a mesh file, choosing the format from the suffix (.msh or .json)."""
    path = Path(path)
    if not path.exists():
        raise MeshError(f"mesh file not found: {path}")
    fmt = {".msh": "gmsh-ascii-v2", ".json": "internal-json"}.get(path.suffix.lower())
    if fmt is None:
        raise MeshError(f"cannot infer mesh format from {path.name}")
    return parse_mesh(path.read_text(), fmt)
