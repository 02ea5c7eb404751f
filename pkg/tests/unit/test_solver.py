"""Tests for the slope limiter, the time steppers and the integration drivers."""

from __future__ import annotations

import jax
import jax.numpy as jnp
import numpy as np
import pytest

from dgnet.dg import element_means
from dgnet.errors import ConfigError, IntegrationError, NewtonConvergenceError
from dgnet.mesh import uniform_1d
from dgnet.physics import BoundaryCondition, BoundaryConfig, FluxModel, primitive_to_conservative
from dgnet.solver import (
    ImplicitConfig,
    apply_limiter,
    backward_euler_step,
    discretize,
    integrate,
    limiter_factor,
    rollout,
    ssp_rk2_step,
    steps_for,
)
from dgnet.solver.setup import constant_state
from dgnet.solver.timestep import jvp_product

OUTFLOW = BoundaryConfig({
    "left": BoundaryCondition(kind="outflow-free"),
    "right": BoundaryCondition(kind="outflow-free"),
})


def _decay(u, t):
    return -u


@pytest.fixture
def limited_line():
    return discretize(uniform_1d(0.0, 1.0, 10), 1, FluxModel(), OUTFLOW, limiter=True)


@pytest.fixture
def smooth_wave(periodic_1d):
    """Density wave advected at 0.5 on the periodic interval."""
    x = periodic_1d.ops.x[..., 0]
    w = jnp.stack([1.0 + 0.2 * jnp.sin(2 * jnp.pi * x), jnp.full_like(x, 0.5), jnp.ones_like(x)], axis=-1)
    return primitive_to_conservative(w, 1.4)


def _temporal_errors(disc, u0, scheme, T, dts, reference):
    errors = []
    for dt in dts:
        u = integrate(u0, dt, round(T / dt), scheme, disc.tangent, implicit=ImplicitConfig(newton_tol=1e-12))
        errors.append(float(jnp.max(jnp.abs(u - reference))))
    return np.asarray(errors)


class TestLimiter:
    def test_constant_untouched(self, limited_line):
        u = constant_state(limited_line, [1.0, 0.2, 2.5])
        np.testing.assert_array_equal(apply_limiter(u, limited_line.limiter), u)

    def test_linear_field_untouched_inside(self, limited_line):
        x = limited_line.ops.x
        u = jnp.concatenate([1.0 + x, 0.1 * x, 2.0 + x], axis=-1)
        limited = apply_limiter(u, limited_line.limiter)
        # end elements see a one-sided stencil and are flattened
        np.testing.assert_allclose(limited[1:-1], u[1:-1], atol=1e-12)

    def test_means_preserved(self, limited_line, random_state):
        u = random_state(jax.random.PRNGKey(5), 10, 2, 1)
        limited = apply_limiter(u, limited_line.limiter)
        np.testing.assert_allclose(
            element_means(limited, limited_line.ops), element_means(u, limited_line.ops), atol=1e-13
        )

    def test_nearly_idempotent(self, limited_line, random_state):
        u = random_state(jax.random.PRNGKey(6), 10, 2, 1)
        once = apply_limiter(u, limited_line.limiter)
        twice = apply_limiter(once, limited_line.limiter)
        np.testing.assert_allclose(twice, once, atol=1e-8)

    def test_overshoot_is_limited(self, sod_small):
        # element 4 spans [0.4, 0.5]; push its left density above every neighbor mean
        u = sod_small.initial().at[4, 0, 0].set(1.5)
        means, sigma = limiter_factor(u, sod_small.limiter)
        assert float(sigma[4, 0]) < 1.0
        assert np.all(np.asarray(sigma[:4]) == 1.0)
        limited = apply_limiter(u, sod_small.limiter)
        lo = float(means[3:6, 0].min())
        hi = float(means[3:6, 0].max())
        assert float(limited[4, :, 0].min()) >= lo - 1e-6
        assert float(limited[4, :, 0].max()) <= hi + 1e-6

    def test_disabled_is_identity(self, sod_small):
        u = sod_small.initial()
        assert apply_limiter(u, None) is u


class TestExplicit:
    def test_rk2_on_linear_decay(self):
        u = jnp.ones((1, 1, 1))
        record = ssp_rk2_step(u, 0.1, _decay)
        np.testing.assert_allclose(record.u1, 0.9)
        np.testing.assert_allclose(record.u2, 1.0 - 0.1 + 0.005, rtol=1e-14)

    def test_free_stream_with_limiter(self, periodic_bcs_1d):
        disc = discretize(uniform_1d(0.0, 1.0, 8), 1, FluxModel(), periodic_bcs_1d, limiter=True)
        u0 = constant_state(disc, primitive_to_conservative(jnp.array([1.0, 0.5, 1.0]), 1.4))
        record = ssp_rk2_step(u0, 0.01, disc.tangent, disc.limiter)
        np.testing.assert_allclose(record.u2, u0, atol=1e-12)

    def test_rollout_matches_integrate(self, sod_small):
        u0 = sod_small.initial()
        states, stage1 = rollout(u0, 1e-3, 5, sod_small.tangent, sod_small.limiter)
        assert states.shape == (6,) + u0.shape
        assert stage1.shape == (5,) + u0.shape
        final = integrate(u0, 1e-3, 5, "ssp-rk2", sod_small.tangent, sod_small.limiter)
        np.testing.assert_allclose(states[-1], final, atol=1e-12)


class TestImplicit:
    def test_linear_decay(self):
        u = jnp.full((2, 2, 1), 3.0)
        result = backward_euler_step(u, 0.5, _decay, ImplicitConfig(newton_tol=1e-12))
        np.testing.assert_allclose(result.state, 3.0 / 1.5, atol=1e-11)
        assert result.residual <= 1e-12
        assert result.history[0] > result.history[-1]

    def test_newton_budget_exhausted(self):
        u = jnp.ones((1, 1, 1))
        with pytest.raises(NewtonConvergenceError) as exc:
            backward_euler_step(u, 0.5, _decay, ImplicitConfig(max_newton=0))
        assert exc.value.iterations == 0

    def test_finite_difference_jvp(self, sod_small):
        u = sod_small.initial()
        v = jax.random.normal(jax.random.PRNGKey(2), u.shape)
        exact = jvp_product(sod_small.tangent, u, v, 0.0, "autodiff")
        approx = jvp_product(sod_small.tangent, u, v, 0.0, "finite-difference")
        # one-sided step of sqrt(eps) * (1 + |u|)
        assert float(jnp.linalg.norm(approx - exact) / jnp.linalg.norm(exact)) < 1e-4

    def test_autodiff_jvp_matches_central_differences(self, periodic_1d, smooth_wave):
        h = 1e-5
        for i in range(3):
            v = jax.random.normal(jax.random.PRNGKey(10 + i), smooth_wave.shape)
            exact = jvp_product(periodic_1d.tangent, smooth_wave, v, 0.0, "autodiff")
            plus = periodic_1d.tangent(smooth_wave + h * v, 0.0)
            minus = periodic_1d.tangent(smooth_wave - h * v, 0.0)
            central = (plus - minus) / (2 * h)
            assert float(jnp.linalg.norm(central - exact) / jnp.linalg.norm(exact)) <= 1e-6

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            ImplicitConfig(newton_tol=0.0)
        with pytest.raises(ConfigError):
            ImplicitConfig(jvp="secant")


class TestTemporalOrder:
    T = 0.04
    DTS = (4e-3, 2e-3, 1e-3)

    @pytest.fixture
    def reference(self, periodic_1d, smooth_wave):
        return integrate(smooth_wave, 1.25e-4, 320, "ssp-rk2", periodic_1d.tangent)

    def test_ssp_rk2_is_second_order(self, periodic_1d, smooth_wave, reference):
        errors = _temporal_errors(periodic_1d, smooth_wave, "ssp-rk2", self.T, self.DTS, reference)
        rates = np.log2(errors[:-1] / errors[1:])
        assert np.all((rates > 1.8) & (rates < 2.3)), rates

    def test_backward_euler_is_first_order(self, periodic_1d, smooth_wave, reference):
        errors = _temporal_errors(periodic_1d, smooth_wave, "backward-euler", self.T, self.DTS, reference)
        rates = np.log2(errors[:-1] / errors[1:])
        assert np.all((rates > 0.8) & (rates < 1.2)), rates


class TestIntegrate:
    def test_snapshot_count(self, sod_small):
        seen = []
        integrate(sod_small.initial(), 1e-3, 4, "ssp-rk2", sod_small.tangent, sod_small.limiter,
                  sink=lambda i, t, u: seen.append((i, t)))
        assert [i for i, _ in seen] == [0, 1, 2, 3, 4]
        assert seen[-1][1] == pytest.approx(4e-3)

    def test_zero_steps(self, sod_small):
        seen = []
        u0 = sod_small.initial()
        final = integrate(u0, 1e-3, 0, "ssp-rk2", sod_small.tangent, sink=lambda i, t, u: seen.append(i))
        assert seen == [0]
        np.testing.assert_array_equal(final, u0)

    def test_failure_names_step(self, sod_small):
        def drain(u, t):
            return -10.0 * jnp.ones_like(u)

        with pytest.raises(IntegrationError) as exc:
            integrate(sod_small.initial(), 1.0, 3, "ssp-rk2", drain, validate=sod_small.flux_model.is_valid)
        assert exc.value.step == 1

    def test_unknown_scheme(self, sod_small):
        with pytest.raises(ConfigError, match="scheme"):
            integrate(sod_small.initial(), 1e-3, 1, "euler", sod_small.tangent)

    def test_steps_for(self):
        assert steps_for(0.25, 0.002) == 125
        assert steps_for(0.15, 1e-4) == 1500
        with pytest.raises(ConfigError):
            steps_for(0.1, 0.03)
