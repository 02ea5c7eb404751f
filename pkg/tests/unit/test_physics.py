"""Tests for Euler algebra, numerical fluxes, boundary conditions and the problem catalog."""

from __future__ import annotations

import math

import jax
import jax.numpy as jnp
import numpy as np
import pytest

from dgnet.errors import ConfigError
from dgnet.physics import (
    BoundaryCondition,
    BoundaryConfig,
    FluxModel,
    boundary_ghost_state,
    conservative_to_primitive,
    get_problem,
    initial_state,
    is_physical,
    max_wave_speed,
    numerical_flux,
    pressure,
    primitive_to_conservative,
    vortex_exact,
)
from dgnet.physics.euler import normal_flux
from dgnet.physics.problems import boundary_config, problem_ids, problem_mesh
from dgnet.physics.reference import reference_solution

SOD_LEFT = primitive_to_conservative(jnp.array([1.0, 0.0, 1.0]), 1.4)
SOD_RIGHT = primitive_to_conservative(jnp.array([0.125, 0.0, 0.1]), 1.4)


def _rotate(u, theta):
    c, s = math.cos(theta), math.sin(theta)
    R = jnp.array([[c, -s], [s, c]])
    return jnp.concatenate([u[..., :1], u[..., 1:3] @ R.T, u[..., 3:]], axis=-1), R


class TestEuler:
    def test_primitive_roundtrip_values(self):
        u = primitive_to_conservative(jnp.array([2.0, 3.0, -1.0, 4.0]), 1.4)
        np.testing.assert_allclose(u, [2.0, 6.0, -2.0, 4.0 / 0.4 + 0.5 * 2.0 * 10.0])
        np.testing.assert_allclose(conservative_to_primitive(u, 1.4), [2.0, 3.0, -1.0, 4.0])

    def test_pressure(self):
        assert float(pressure(SOD_RIGHT, 1.4)) == pytest.approx(0.1)

    def test_physical_mask(self):
        states = jnp.stack([SOD_LEFT, SOD_LEFT.at[0].set(-1.0), SOD_LEFT.at[2].set(-1.0), SOD_LEFT.at[1].set(jnp.nan)])
        assert is_physical(states, 1.4).tolist() == [True, False, False, False]

    def test_wave_speed_matches_jacobian_eigenvalues(self):
        keys = jax.random.split(jax.random.PRNGKey(0), 20)
        for key in keys:
            k1, k2, k3 = jax.random.split(key, 3)
            w = jnp.concatenate([
                jax.random.uniform(k1, (1,), minval=0.2, maxval=2.0),
                jax.random.uniform(k2, (2,), minval=-2.0, maxval=2.0),
                jax.random.uniform(k3, (1,), minval=0.2, maxval=2.0),
            ])
            u = primitive_to_conservative(w, 1.4)
            n = jnp.array([0.6, 0.8])
            A = jax.jacfwd(lambda v: normal_flux(v, n, 1.4))(u)
            eig = np.abs(np.linalg.eigvals(np.asarray(A))).max()
            lam = float(max_wave_speed(u, u, n, 1.4))
            assert lam == pytest.approx(eig, rel=1e-6)


class TestFluxes:
    def test_lax_friedrichs_sod_interface(self):
        flux = numerical_flux("lax-friedrichs", SOD_LEFT, SOD_RIGHT, jnp.array([1.0]))
        expected = 0.5 * math.sqrt(1.4) * (1.0 - 0.125)
        assert float(flux[0]) == pytest.approx(expected, rel=1e-12)
        assert float(flux[0]) == pytest.approx(0.51766, abs=1e-5)

    @pytest.mark.parametrize("scheme", ["lax-friedrichs", "hll"])
    def test_consistency(self, scheme):
        u = primitive_to_conservative(jnp.array([1.2, 0.4, -0.3, 0.9]), 1.4)
        n = jnp.array([0.0, -1.0])
        np.testing.assert_allclose(numerical_flux(scheme, u, u, n), normal_flux(u, n, 1.4), atol=1e-13)

    @pytest.mark.parametrize("scheme", ["lax-friedrichs", "hll"])
    def test_antisymmetry(self, scheme):
        n = jnp.array([1.0])
        forward = numerical_flux(scheme, SOD_LEFT, SOD_RIGHT, n)
        backward = numerical_flux(scheme, SOD_RIGHT, SOD_LEFT, -n)
        np.testing.assert_allclose(forward, -backward, atol=1e-13)

    @pytest.mark.parametrize("scheme", ["lax-friedrichs", "hll"])
    def test_rotation_invariance(self, scheme):
        u_minus = primitive_to_conservative(jnp.array([1.0, 0.5, 0.2, 1.0]), 1.4)
        u_plus = primitive_to_conservative(jnp.array([0.3, -0.1, 0.4, 0.4]), 1.4)
        n = jnp.array([1.0, 0.0])
        direct = numerical_flux(scheme, u_minus, u_plus, n)
        rm, R = _rotate(u_minus, 0.7)
        rp, _ = _rotate(u_plus, 0.7)
        rotated = numerical_flux(scheme, rm, rp, R @ n)
        back, _ = _rotate(rotated, -0.7)
        np.testing.assert_allclose(back, direct, atol=1e-12)

    @pytest.mark.parametrize("direction", [1.0, -1.0])
    def test_hll_supersonic_upwinding(self, direction):
        n = jnp.array([0.6, 0.8])
        # both states move faster than sound along direction * n
        u_minus = primitive_to_conservative(jnp.array([1.0, *(direction * 3.0 * n), 1.0]), 1.4)
        u_plus = primitive_to_conservative(jnp.array([0.5, *(direction * 3.5 * n), 0.8]), 1.4)
        upwind = u_minus if direction > 0 else u_plus
        np.testing.assert_allclose(
            numerical_flux("hll", u_minus, u_plus, n), normal_flux(upwind, n, 1.4), rtol=1e-14, atol=1e-14
        )

    def test_wave_speed_symmetry_and_lax_friedrichs_dissipation(self, random_state):
        k1, k2, k3 = jax.random.split(jax.random.PRNGKey(7), 3)
        u_minus = random_state(k1, 200, 1, 2)[:, 0]
        u_plus = random_state(k2, 200, 1, 2)[:, 0]
        angle = jax.random.uniform(k3, (200,), maxval=2 * math.pi)
        n = jnp.stack([jnp.cos(angle), jnp.sin(angle)], axis=-1)
        lam = max_wave_speed(u_minus, u_plus, n, 1.4)
        np.testing.assert_array_equal(lam, max_wave_speed(u_plus, u_minus, n, 1.4))
        np.testing.assert_allclose(lam, max_wave_speed(u_minus, u_plus, -n, 1.4), rtol=1e-15)
        central = 0.5 * (normal_flux(u_minus, n, 1.4) + normal_flux(u_plus, n, 1.4))
        lf = numerical_flux("lax-friedrichs", u_minus, u_plus, n)
        np.testing.assert_allclose(lf - central, 0.5 * lam[:, None] * (u_minus - u_plus), rtol=0, atol=1e-14)

    def test_linear_advection(self):
        model = FluxModel(scheme="linear-advection", speed=(2.0,))
        n = jnp.array([1.0])
        # upwind: LF with lambda = |a| picks the minus side for a·n > 0
        assert float(model.numerical_flux(jnp.array([3.0]), jnp.array([1.0]), n)[0]) == pytest.approx(6.0)
        assert model.n_equations(1) == 1
        assert model.scaled(0.5).speed == (1.0,)

    def test_unknown_scheme(self):
        with pytest.raises(ConfigError, match="flux"):
            FluxModel(scheme="roe")

    def test_advection_needs_speed(self):
        with pytest.raises(ConfigError):
            FluxModel(scheme="linear-advection")

    def test_euler_cannot_scale(self):
        with pytest.raises(ConfigError):
            FluxModel().scaled(2.0)


class TestBoundary:
    def test_reflective_wall_mirrors_normal_velocity(self):
        u = primitive_to_conservative(jnp.array([1.0, 0.3, 0.5, 1.0]), 1.4)
        n = jnp.array([0.0, 1.0])
        ghost = boundary_ghost_state(BoundaryCondition(kind="reflective-wall"), u, n, 0.0, jnp.zeros(2))
        np.testing.assert_allclose(ghost, u * jnp.array([1.0, 1.0, -1.0, 1.0]))

    def test_inflow_and_outflow(self):
        u = SOD_LEFT[None]
        inflow = BoundaryCondition(kind="inflow", state=tuple(float(v) for v in SOD_RIGHT))
        n, x = jnp.array([[1.0]]), jnp.zeros((1, 1))
        np.testing.assert_allclose(boundary_ghost_state(inflow, u, n, 0.0, x), SOD_RIGHT[None])
        outflow = BoundaryCondition(kind="outflow-free")
        np.testing.assert_allclose(boundary_ghost_state(outflow, u, n, 0.0, x), u)

    def test_missing_tag(self):
        bcs = BoundaryConfig({"left": BoundaryCondition(kind="outflow-free")})
        with pytest.raises(ConfigError, match="right"):
            bcs.validate(["left", "right"])

    def test_periodic_partner_must_agree(self):
        bcs = BoundaryConfig({
            "left": BoundaryCondition(kind="periodic-pair", partner="right"),
            "right": BoundaryCondition(kind="periodic-pair", partner="top"),
        })
        with pytest.raises(ConfigError, match="partner"):
            bcs.validate(["left", "right"])

    def test_periodic_pairs_listed_once(self):
        bcs = BoundaryConfig({
            "right": BoundaryCondition(kind="periodic-pair", partner="left"),
            "left": BoundaryCondition(kind="periodic-pair", partner="right"),
        })
        assert bcs.periodic_pairs == (("left", "right"),)

    @pytest.mark.parametrize("kwargs", [{"kind": "slip"}, {"kind": "inflow"}, {"kind": "periodic-pair"}])
    def test_incomplete_condition(self, kwargs):
        with pytest.raises(ConfigError):
            BoundaryCondition(**kwargs)


class TestProblems:
    def test_catalog(self):
        ids = problem_ids()
        for expected in ("sod", "lax", "sod-family", "vortex", "config6", "double-mach"):
            assert expected in ids

    def test_unknown_problem(self):
        with pytest.raises(ConfigError, match="unknown problem"):
            get_problem("nozzle")

    def test_sod_initial_state(self):
        u = initial_state("sod", jnp.array([[0.25], [0.75]]))
        np.testing.assert_allclose(u[0], SOD_LEFT)
        np.testing.assert_allclose(u[1], SOD_RIGHT)

    def test_family_member(self):
        u = initial_state("sod-family", jnp.array([[0.9]]), member=1)
        np.testing.assert_allclose(conservative_to_primitive(u, 1.4)[0], [0.2, 0.0, 0.1], atol=1e-14)
        with pytest.raises(ConfigError, match="member"):
            initial_state("sod-family", jnp.array([[0.9]]), member=8)

    def test_vortex_is_advected(self):
        x = jnp.array([[4.2, 0.3], [5.5, -1.0], [7.0, 2.0]])
        shifted = x + jnp.array([0.4, 0.0])
        np.testing.assert_allclose(vortex_exact(shifted, 0.4, 1.4), vortex_exact(x, 0.0, 1.4), atol=1e-14)

    def test_vortex_density_dip_at_center(self):
        center = vortex_exact(jnp.array([5.0, 0.0]), 0.0, 1.4)
        far = vortex_exact(jnp.array([9.0, 4.0]), 0.0, 1.4)
        assert float(center[0]) < float(far[0])
        assert float(far[0]) == pytest.approx(1.0, abs=1e-6)

    def test_mesh_overrides(self):
        sod = get_problem("sod")
        assert problem_mesh(sod).K == 250
        assert problem_mesh(sod, K=10).K == 10
        vortex = get_problem("vortex")
        assert problem_mesh(vortex, level=1).K == 2 * 32 * 32

    def test_double_mach_split_tags(self):
        problem = get_problem("double-mach")
        mesh = problem_mesh(problem)
        assert "bottom-inflow" in mesh.tags
        bcs = boundary_config(problem)
        bcs.validate(mesh.tags)
        assert bcs.conditions["left"].kind == "inflow"

    def test_mesh_required(self):
        with pytest.raises(ConfigError, match="--mesh"):
            problem_mesh(get_problem("airfoil"))


class TestReference:
    def test_sod_regions(self):
        x = np.array([0.1, 0.6, 0.75, 0.95])
        w = reference_solution("sod", x, 0.2)
        np.testing.assert_allclose(w[:, 0], [1.0, 0.426318922, 0.265573711, 0.125])
        np.testing.assert_allclose(w[1:3, 1], 0.927452620)

    def test_rarefaction_is_continuous(self):
        w = reference_solution("sod", np.linspace(0.2, 0.5, 301), 0.2)
        assert np.abs(np.diff(w[:, 0])).max() < 0.01

    def test_unknown(self):
        with pytest.raises(ConfigError):
            reference_solution("vortex", np.zeros(3), 0.1)
