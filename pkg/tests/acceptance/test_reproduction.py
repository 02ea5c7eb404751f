"""Slow reproduction runs: convergence, implicit stability, training progress and diagnostics.

Run with ``pytest -m acceptance``.
"""

from __future__ import annotations

import jax
import jax.numpy as jnp
import numpy as np
import pytest
from click.testing import CliRunner
from scipy.ndimage import binary_dilation

from dgnet.analysis import (
    convergence_rates,
    face_triples,
    input_density_histogram,
    l2_error_exact,
    wave_speed_profile,
)
from dgnet.cli import element_size, main
from dgnet.errors import IntegrationError
from dgnet.physics.problems import vortex_exact
from dgnet.solver import ImplicitConfig, discretize_problem, integrate, steps_for
from dgnet.surrogate import init_params, oracle_flux_network
from dgnet.training import (
    TrainConfig,
    TrainingSet,
    build_stage_model,
    generate_dataset,
    generate_trajectory,
    make_validator,
    randomize,
    train_loop,
)

pytestmark = pytest.mark.acceptance

VORTEX_T = 0.1
VORTEX_DT = 0.002
# reference DG density errors on the three nested meshes, and the fitted rates
VORTEX_ERRORS = {
    1: (6.32e-2, 2.51e-2, 7.51e-3),
    2: (1.95e-2, 4.43e-3, 8.58e-4),
    3: (6.71e-3, 7.58e-4, 8.20e-5),
}
VORTEX_RATES = {1: 1.55, 2: 2.25, 3: 3.18}


def _vortex_errors(N: int) -> tuple[list[float], list[float]]:
    n_steps = steps_for(VORTEX_T, VORTEX_DT)
    errors, sizes = [], []
    for level in range(3):
        disc = discretize_problem("vortex", N=N, mode="over-integration", level=level)
        u = integrate(disc.initial(), VORTEX_DT, n_steps, "ssp-rk2", disc.tangent, disc.limiter,
                      validate=disc.flux_model.is_valid)
        errors.append(l2_error_exact(u, disc.ops, lambda x, t: vortex_exact(x, t, disc.gamma), VORTEX_T))
        sizes.append(element_size(disc.mesh))
    return errors, sizes


class TestVortexConvergence:
    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_errors_and_rate(self, N):
        errors, sizes = _vortex_errors(N)
        for got, expected in zip(errors, VORTEX_ERRORS[N]):
            assert expected / 1.5 <= got <= expected * 1.5
        assert convergence_rates(errors, sizes) == pytest.approx(VORTEX_RATES[N], abs=0.3)


class TestImplicitSod:
    DT = 0.002

    def test_backward_euler_completes(self):
        disc = discretize_problem("sod", N=1, K=250)
        n_steps = steps_for(0.25, self.DT)
        u = integrate(disc.initial(), self.DT, n_steps, "backward-euler", disc.tangent, disc.limiter,
                      ImplicitConfig.from_settings(), validate=disc.flux_model.is_valid)
        rho = np.asarray(u[..., 0])
        assert np.all(np.isfinite(np.asarray(u)))
        # the limited density stays near the initial range
        assert rho.min() >= 0.1
        assert rho.max() <= 1.05

    def test_explicit_diverges_at_same_step(self):
        disc = discretize_problem("sod", N=1, K=250)
        with pytest.raises(IntegrationError) as exc:
            integrate(disc.initial(), self.DT, 200, "ssp-rk2", disc.tangent, disc.limiter,
                      validate=disc.flux_model.is_valid)
        assert exc.value.step <= 200


def _sod_family_sets(members=None):
    datasets = generate_dataset("sod-family", gammas=[1.2, 1.6], members=members, N=1)
    sets = []
    for dataset in datasets:
        disc = discretize_problem("sod-family", N=1, gamma=dataset.gamma)
        sets.append(TrainingSet(dataset, build_stage_model(disc, dataset.dt)))
    return sets


def _sod_validator(T: float):
    validation = discretize_problem("sod", N=1, K=50)
    reference = generate_trajectory(validation, validation.initial(), T, 1e-4)
    return make_validator(build_stage_model(validation, 1e-4, rho_bounds=None), reference.states)


class TestTrainingProgress:
    def test_model_constrained_beats_initialization(self):
        sets = _sod_family_sets(members=[0, 7])
        cfg = TrainConfig(mode="model-constrained", delta=0.005, window=15, epochs=200, cadence=10, seed=0)
        params = init_params(jax.random.PRNGKey(0), 1, sets[0].model.ops.n_p)
        result = train_loop(cfg, sets, params, _sod_validator(0.15), progress=False)

        initial = result.history[0].validation_error
        assert result.best_error < initial
        best_curve = [h.best_validation_error for h in result.history if h.best_validation_error is not None]
        assert all(a >= b for a, b in zip(best_curve, best_curve[1:]))

    def test_model_constrained_reaches_target_accuracy(self):
        sets = _sod_family_sets()
        cfg = TrainConfig(mode="model-constrained", delta=0.005, window=15, epochs=5000, cadence=50, seed=0)
        params = init_params(jax.random.PRNGKey(0), 1, sets[0].model.ops.n_p)
        result = train_loop(cfg, sets, params, _sod_validator(0.15), progress=False)
        assert result.best_error <= 0.05

        # beyond the training horizon
        assert _sod_validator(0.25)(result.best_params) <= 0.10


class TestRandomization:
    @pytest.mark.parametrize("delta", [0.01, 0.05])
    def test_quadratic_expectation(self, delta):
        u = 1.7
        samples = randomize(jnp.full(1_000_000, u), delta, jax.random.PRNGKey(11))
        values = np.asarray(samples) ** 2
        standard_error = values.std() / np.sqrt(values.size)
        assert abs(values.mean() - u**2 * (1.0 + delta**2)) <= 3.0 * standard_error


class TestDiagnostics:
    def test_randomized_histogram_covers_clean(self):
        disc = discretize_problem("sod", N=1, K=50, mode="collocation")
        dataset = generate_trajectory(disc, disc.initial(), 0.15, 1e-4)
        args = (dataset.states, disc.ops, disc.bcs, disc.flux_model, dataset.times)
        clean = input_density_histogram(face_triples(*args))
        noisy = input_density_histogram(face_triples(*args, delta=0.02, key=jax.random.PRNGKey(0), epochs=5))
        assert noisy.n_occupied >= clean.n_occupied

        missed = 0
        for clean_cells, noisy_cells in zip(clean.occupied(), noisy.occupied()):
            missed += int((clean_cells & ~binary_dilation(noisy_cells)).sum())
        assert missed <= 0.01 * clean.n_occupied

    @pytest.mark.parametrize("speed", [(0.8,), (3.0, 4.0)])
    def test_wave_speed_of_linear_advection(self, speed):
        planes = wave_speed_profile(oracle_flux_network("linear-advection", speed), len(speed))
        expected = 0.5 * float(np.linalg.norm(speed))
        for plane in planes:
            np.testing.assert_allclose(plane.values[~plane.mask], expected, atol=1e-10)


class TestDeterminism:
    def test_solve_rerun_is_byte_identical(self, tmp_path):
        runner = CliRunner()
        args = ["solve", "--problem", "sod", "--K", "50", "--N", "1", "--T", "0.01", "--dt", "1e-4"]
        for name in ("a", "b"):
            result = runner.invoke(main, [*args, "--out", str(tmp_path / name)])
            assert result.exit_code == 0, result.output
        for artifact in ("frames.bin", "final.csv"):
            assert (tmp_path / "a" / artifact).read_bytes() == (tmp_path / "b" / artifact).read_bytes()
