"""Tests for mesh parsing, connectivity, periodic pairing and geometric factors."""

from __future__ import annotations

import json

import numpy as np
import pytest

from dgnet.errors import MeshError
from dgnet.mesh import (
    build_connectivity,
    dual_graph,
    geometric_factors,
    load_mesh,
    parse_mesh,
    rectangle,
    uniform_1d,
)
from dgnet.mesh.parse import mesh_to_json, split_tag


def _json_mesh(vertices, elements, boundary=()):
    return json.dumps({
        "schema": "mesh/1",
        "dim": 2,
        "vertices": vertices,
        "elements": elements,
        "boundary": [{"vertices": list(v), "tag": t} for v, t in boundary],
    })


class TestUniform1D:
    def test_counts(self):
        mesh = parse_mesh("0 1 250", "uniform-1d")
        assert mesh.K == 250
        assert mesh.n_vertices == 251
        assert mesh.tags == ["left", "right"]

    def test_equal_segments(self):
        mesh = uniform_1d(0.0, 2.0, 4)
        lengths = np.diff(mesh.vertices[mesh.elements][:, :, 0], axis=1)
        np.testing.assert_allclose(lengths, 0.5)

    def test_bad_spec(self):
        with pytest.raises(MeshError):
            parse_mesh("0 1", "uniform-1d")
        with pytest.raises(MeshError):
            uniform_1d(1.0, 0.0, 4)


class TestGmsh:
    def test_unit_square(self, fixtures_dir):
        mesh = load_mesh(fixtures_dir / "square.msh")
        assert mesh.dim == 2
        assert mesh.K == 2
        assert mesh.n_vertices == 4
        assert mesh.tags == ["wall"]

    def test_clockwise_element_reoriented(self, fixtures_dir):
        mesh = load_mesh(fixtures_dir / "square.msh")
        geom = geometric_factors(mesh)
        assert np.all(geom.det > 0)
        np.testing.assert_allclose(geom.det, 0.25)

    def test_quad_rejected_with_line(self, fixtures_dir):
        with pytest.raises(MeshError, match="unsupported element type") as exc:
            load_mesh(fixtures_dir / "quad.msh")
        assert exc.value.line == 13

    def test_binary_rejected(self):
        text = "$MeshFormat\n2.2 1 8\n$EndMeshFormat\n"
        with pytest.raises(MeshError, match="binary"):
            parse_mesh(text, "gmsh-ascii-v2")

    def test_missing_format(self):
        with pytest.raises(MeshError, match="MeshFormat"):
            parse_mesh("$Nodes\n0\n$EndNodes\n", "gmsh-ascii-v2")

    def test_missing_file(self, tmp_path):
        with pytest.raises(MeshError, match="not found"):
            load_mesh(tmp_path / "absent.msh")


class TestJson:
    def test_single_triangle(self, fixtures_dir):
        mesh = load_mesh(fixtures_dir / "triangle.json")
        assert mesh.K == 1
        assert mesh.tags == ["bottom", "hypotenuse", "left"]

    def test_unknown_schema(self):
        with pytest.raises(MeshError, match="schema"):
            parse_mesh(json.dumps({"schema": "other", "dim": 2}), "internal-json")

    def test_wrong_vertex_count(self):
        text = _json_mesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2, 3]])
        with pytest.raises(MeshError, match="unsupported element type"):
            parse_mesh(text, "internal-json")

    def test_degenerate_triangle(self):
        text = _json_mesh([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])
        with pytest.raises(MeshError, match="degenerate"):
            parse_mesh(text, "internal-json")

    def test_invalid_json_reports_line(self):
        with pytest.raises(MeshError) as exc:
            parse_mesh('{\n"schema": "mesh/1",\n"dim": }', "internal-json")
        assert exc.value.line == 3

    def test_serialized_mesh_parses_back(self):
        mesh = rectangle(0.0, 1.0, 0.0, 1.0, 2, 1)
        again = parse_mesh(mesh_to_json(mesh), "internal-json")
        np.testing.assert_array_equal(again.elements, mesh.elements)
        assert again.boundary_tags == mesh.boundary_tags


class TestConnectivity:
    def test_two_triangle_square(self, fixtures_dir):
        conn = build_connectivity(load_mesh(fixtures_dir / "square.msh"))
        assert len(conn.interior_faces) == 1
        assert len(conn.boundary_faces) == 4

    def test_line_topology(self):
        conn = build_connectivity(uniform_1d(0.0, 1.0, 3))
        assert len(conn.interior_faces) == 2
        assert len(conn.boundary_faces) == 2

    def test_each_interior_face_once(self):
        mesh = rectangle(0.0, 1.0, 0.0, 1.0, 2, 2)
        conn = build_connectivity(mesh)
        # 16 edges, 8 of them on the boundary
        assert len(conn.interior_faces) == 8
        pairs = {tuple(sorted(((f.k, f.e), (f.nk, f.ne)))) for f in conn.interior_faces}
        assert len(pairs) == len(conn.interior_faces)

    def test_neighbor_symmetry(self):
        conn = build_connectivity(rectangle(0.0, 1.0, 0.0, 1.0, 3, 2))
        for k, e in zip(*np.nonzero(conn.neighbor >= 0)):
            nk, ne = conn.neighbor[k, e], conn.neighbor_face[k, e]
            assert conn.neighbor[nk, ne] == k
            assert conn.neighbor_face[nk, ne] == e

    def test_opposite_normals_across_faces(self):
        mesh = rectangle(0.0, 1.0, 0.0, 1.0, 3, 2)
        conn = build_connectivity(mesh)
        geom = geometric_factors(mesh)
        for f in conn.interior_faces:
            np.testing.assert_allclose(geom.normals[f.k, f.e], -geom.normals[f.nk, f.ne], atol=1e-12)

    def test_periodic_pairs(self):
        mesh = rectangle(0.0, 1.0, 0.0, 1.0, 2, 2)
        conn = build_connectivity(mesh, periodic=(("left", "right"), ("bottom", "top")))
        assert conn.boundary_faces == []
        assert len(conn.interior_faces) == 12
        assert sum(f.periodic for f in conn.interior_faces) == 4

    def test_periodic_mismatch(self):
        mesh = split_tag(rectangle(0.0, 1.0, 0.0, 1.0, 2, 2), "bottom", "inlet", 0.5)
        with pytest.raises(MeshError, match="periodic"):
            build_connectivity(mesh, periodic=(("bottom", "top"),))

    def test_untagged_boundary(self):
        text = _json_mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [((0, 1), "bottom")])
        with pytest.raises(MeshError, match="untagged"):
            build_connectivity(parse_mesh(text, "internal-json"))

    def test_hanging_node(self):
        text = _json_mesh(
            [[0, 0], [2, 0], [0, 2], [2, 2], [1, 1]],
            [[0, 1, 2], [1, 3, 4], [4, 3, 2]],
        )
        with pytest.raises(MeshError, match="hanging node"):
            build_connectivity(parse_mesh(text, "internal-json"))

    def test_duplicated_element(self):
        text = _json_mesh([[0, 0], [1, 0], [0, 1], [1, 1]], [[0, 1, 2], [0, 1, 2], [0, 1, 2]])
        with pytest.raises(MeshError, match="shared by 3 elements"):
            build_connectivity(parse_mesh(text, "internal-json"))

    def test_stencils_1d(self):
        conn = build_connectivity(uniform_1d(0.0, 1.0, 5))
        assert conn.stencils[0].tolist() == [0, 1]
        assert conn.stencils[2].tolist() == [1, 2, 3]

    def test_periodic_stencils_wrap(self):
        conn = build_connectivity(uniform_1d(0.0, 1.0, 5), periodic=(("left", "right"),))
        assert conn.stencils[0].tolist() == [0, 1, 4]

    def test_dual_graph(self):
        conn = build_connectivity(rectangle(0.0, 1.0, 0.0, 1.0, 2, 2))
        graph = dual_graph(conn)
        assert graph.number_of_nodes() == 8
        assert graph.number_of_edges() == len(conn.interior_faces)
        for k in range(8):
            assert graph.degree(k) == int((conn.neighbor[k] >= 0).sum())


class TestGeometry:
    def test_unit_right_triangle(self, fixtures_dir):
        geom = geometric_factors(load_mesh(fixtures_dir / "triangle.json"))
        # reference triangle has area 2
        np.testing.assert_allclose(geom.det, [0.25])
        np.testing.assert_allclose(geom.normals[0, 1], [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)

    def test_closed_surface(self):
        geom = geometric_factors(rectangle(0.0, 2.0, -1.0, 1.0, 4, 3))
        np.testing.assert_allclose(np.linalg.norm(geom.normals, axis=-1), 1.0, atol=1e-12)
        closure = np.einsum("kfd,kf->kd", geom.normals, geom.face_lengths)
        np.testing.assert_allclose(closure, 0.0, atol=1e-12)

    def test_segment_normals(self):
        geom = geometric_factors(uniform_1d(0.0, 0.004, 1))
        np.testing.assert_array_equal(geom.normals[0, :, 0], [-1.0, 1.0])
        np.testing.assert_allclose(geom.det, [0.002])
