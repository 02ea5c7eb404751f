"""Tests for the reference bases, element operators and the DG tangent."""

from __future__ import annotations

import jax
import jax.numpy as jnp
import numpy as np
import pytest

from dgnet.dg import build_basis, dg_tangent, element_means, l2_norm_squared
from dgnet.dg.basis import collapsed_gauss_rule
from dgnet.errors import BasisError, ConfigError, NonPhysicalStateError
from dgnet.mesh import rectangle, uniform_1d
from dgnet.physics.euler import primitive_to_conservative
from dgnet.physics.fluxes import FluxModel
from dgnet.solver import discretize
from dgnet.solver.setup import constant_state


class TestBasis:
    def test_lgl_nodes(self):
        basis = build_basis(1, 3)
        expected = [-1.0, -1.0 / np.sqrt(5.0), 1.0 / np.sqrt(5.0), 1.0]
        np.testing.assert_allclose(basis.nodes[:, 0], expected, atol=1e-14)

    def test_1d_differentiation_exact(self):
        basis = build_basis(1, 3)
        r = basis.nodes[:, 0]
        np.testing.assert_allclose(basis.diff[0] @ r**3, 3 * r**2, atol=1e-12)

    def test_2d_differentiation_exact(self):
        basis = build_basis(2, 3)
        r, s = basis.nodes[:, 0], basis.nodes[:, 1]
        u = r**2 * s
        np.testing.assert_allclose(basis.diff[0] @ u, 2 * r * s, atol=1e-11)
        np.testing.assert_allclose(basis.diff[1] @ u, r**2, atol=1e-11)

    @pytest.mark.parametrize("dim,N,n_p", [(1, 1, 2), (1, 4, 5), (2, 1, 3), (2, 3, 10), (2, 8, 45)])
    def test_node_counts(self, dim, N, n_p):
        basis = build_basis(dim, N)
        assert basis.n_p == n_p
        assert basis.n_e == (1 if dim == 1 else N + 1)

    @pytest.mark.parametrize("dim", [1, 2])
    def test_mass_measures_reference_element(self, dim):
        # both reference elements have measure 2
        basis = build_basis(dim, 3)
        assert basis.mass.sum() == pytest.approx(2.0, abs=1e-12)
        np.testing.assert_allclose(basis.mass @ basis.inv_mass, np.eye(basis.n_p), atol=1e-11)

    def test_face_nodes_on_faces(self):
        basis = build_basis(2, 4)
        r, s = basis.nodes[basis.fmask].transpose(2, 0, 1)
        np.testing.assert_allclose(s[0], -1.0, atol=1e-12)
        np.testing.assert_allclose(r[1] + s[1], 0.0, atol=1e-12)
        np.testing.assert_allclose(r[2], -1.0, atol=1e-12)
        # each face runs from its start vertex to its end vertex
        assert np.all(np.diff(r[0]) > 0)
        assert np.all(np.diff(s[1]) > 0)
        assert np.all(np.diff(s[2]) < 0)

    def test_collapsed_rule(self):
        nodes, weights = collapsed_gauss_rule(3)
        assert weights.sum() == pytest.approx(2.0)
        # centroid (-1/3, -1/3) times area 2
        assert weights @ nodes[:, 0] == pytest.approx(-2.0 / 3.0)
        assert weights @ (nodes[:, 0] ** 2 * nodes[:, 1] ** 3) == pytest.approx(
            _triangle_monomial(2, 3), abs=1e-13
        )

    @pytest.mark.parametrize("dim,N", [(1, 0), (1, 9), (3, 2)])
    def test_unsupported(self, dim, N):
        with pytest.raises(BasisError):
            build_basis(dim, N)


def _triangle_monomial(p, q):
    """∫ r^p s^q over the reference triangle by a fine tensor rule on the collapsed square."""
    a, wa = np.polynomial.legendre.leggauss(20)
    b, wb = a, wa
    A, B = np.meshgrid(a, b, indexing="ij")
    r = 0.5 * (1 + A) * (1 - B) - 1
    s = B
    jac = 0.5 * (1 - B)
    return float(np.sum(np.outer(wa, wb) * jac * r**p * s**q))


class TestOperators:
    def test_physical_mass_1d(self, periodic_bcs_1d):
        disc = discretize(uniform_1d(0.0, 1.0, 4), 1, FluxModel(), periodic_bcs_1d)
        h = 0.25
        np.testing.assert_allclose(disc.ops.mass[0], h / 6 * np.array([[2.0, 1.0], [1.0, 2.0]]), atol=1e-14)

    def test_mean_weights(self, periodic_2d):
        ops = periodic_2d.ops
        assert float(ops.mean_weights.sum()) == pytest.approx(1.0)
        u = jnp.ones(periodic_2d.state_shape) * jnp.arange(4.0)
        np.testing.assert_allclose(element_means(u, ops), np.broadcast_to(np.arange(4.0), (ops.K, 4)), atol=1e-13)

    def test_periodic_faces_have_no_boundary(self, periodic_2d):
        assert periodic_2d.ops.boundary == {}

    def test_paired_nodes_coincide_up_to_period(self, periodic_2d):
        ops = periodic_2d.ops
        x_flat = ops.x.reshape(-1, 2)
        offset = x_flat[ops.map_p] - ops.x[:, ops.fmask, :]
        np.testing.assert_allclose(offset, np.round(offset), atol=1e-12)
        assert np.all(ops.map_p // ops.n_p != np.arange(ops.K)[:, None, None])

    def test_unknown_mode(self, periodic_bcs_1d):
        with pytest.raises(ConfigError, match="quadrature"):
            discretize(uniform_1d(0.0, 1.0, 4), 1, FluxModel(), periodic_bcs_1d, mode="spectral")


class TestTangent:
    @pytest.mark.parametrize("fixture", ["periodic_1d", "periodic_2d"])
    @pytest.mark.parametrize("mode", ["collocation", "over-integration"])
    def test_free_stream_preserved(self, fixture, mode, request):
        disc = request.getfixturevalue(fixture).with_mode(mode)
        d = disc.mesh.dim
        w = jnp.array([1.0] + [0.3, -0.2][:d] + [1.0])
        u = constant_state(disc, primitive_to_conservative(w, 1.4))
        F = disc.tangent(u, 0.0)
        assert float(jnp.abs(F).max()) <= 1e-11

    @pytest.mark.parametrize("fixture", ["periodic_1d", "periodic_2d"])
    @pytest.mark.parametrize("mode", ["collocation", "over-integration"])
    def test_conservation(self, fixture, mode, random_state, request):
        disc = request.getfixturevalue(fixture).with_mode(mode)
        K, Np, m = disc.state_shape
        u = random_state(jax.random.PRNGKey(3), K, Np, disc.mesh.dim)
        F = disc.tangent(u, 0.0)
        total = jnp.einsum("knl,klm->m", disc.ops.mass, F)
        np.testing.assert_allclose(total, 0.0, atol=1e-11)

    @pytest.mark.parametrize("mode", ["collocation", "over-integration"])
    def test_piecewise_linear_advection_exact(self, mode, periodic_bcs_1d):
        flux = FluxModel(scheme="linear-advection", speed=(2.0,))
        disc = discretize(uniform_1d(0.0, 1.0, 8), 1, flux, periodic_bcs_1d, mode=mode)
        x = disc.ops.x[..., 0]
        u = jnp.abs(x - 0.5)[..., None]
        # the tent is continuous, so F = -a u' element by element
        slope = np.where(x.mean(axis=1, keepdims=True) > 0.5, 1.0, -1.0)
        F = disc.tangent(u, 0.0)
        np.testing.assert_allclose(F[..., 0], -2.0 * np.broadcast_to(slope, x.shape), atol=1e-12)

    def test_linear_in_state_and_flux(self, periodic_bcs_2d):
        flux = FluxModel(scheme="linear-advection", speed=(1.0, 0.5))
        disc = discretize(rectangle(0.0, 1.0, 0.0, 1.0, 2, 2), 2, flux, periodic_bcs_2d)
        k1, k2 = jax.random.split(jax.random.PRNGKey(0))
        u = jax.random.normal(k1, disc.state_shape)
        v = jax.random.normal(k2, disc.state_shape)
        F = disc.tangent
        np.testing.assert_allclose(F(2.0 * u - 3.0 * v, 0.0), 2.0 * F(u, 0.0) - 3.0 * F(v, 0.0), atol=1e-11)
        scaled = dg_tangent(u, disc.ops, flux.scaled(-1.5), disc.bcs)
        np.testing.assert_allclose(scaled, -1.5 * F(u, 0.0), atol=1e-11)

    @pytest.mark.parametrize("fixture", ["periodic_1d", "periodic_2d"])
    def test_linear_flux_modes_agree(self, fixture, request):
        base = request.getfixturevalue(fixture)
        d = base.mesh.dim
        flux = FluxModel(scheme="linear-advection", speed=(1.0, -0.7)[:d])
        coll = discretize(base.mesh, 2, flux, base.bcs, mode="collocation")
        over = coll.with_mode("over-integration")
        u = jax.random.normal(jax.random.PRNGKey(7), coll.state_shape)
        np.testing.assert_allclose(coll.tangent(u, 0.0), over.tangent(u, 0.0), atol=1e-10)

    def test_nonphysical_state_names_element(self, periodic_1d, random_state):
        K, Np, _ = periodic_1d.state_shape
        u = random_state(jax.random.PRNGKey(1), K, Np, 1)
        u = u.at[3, 1, 0].set(-1.0)
        with pytest.raises(NonPhysicalStateError) as exc:
            periodic_1d.tangent(u, 0.0)
        assert exc.value.element == 3

    def test_check_skipped_when_disabled(self, periodic_1d, random_state):
        K, Np, _ = periodic_1d.state_shape
        u = random_state(jax.random.PRNGKey(1), K, Np, 1).at[0, 0, 0].set(-1.0)
        F = dg_tangent(u, periodic_1d.ops, periodic_1d.flux_model, periodic_1d.bcs, check=False)
        assert F.shape == u.shape

    def test_l2_norm(self, periodic_2d):
        u = jnp.full(periodic_2d.state_shape, 2.0)
        # unit square: ∫ 2² over 4 components
        assert float(l2_norm_squared(u, periodic_2d.ops)) == pytest.approx(16.0)
        assert float(l2_norm_squared(u, periodic_2d.ops, components=[0])) == pytest.approx(4.0)
