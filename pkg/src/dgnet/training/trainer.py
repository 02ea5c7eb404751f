"""Training loop: window sampling, losses, ADAM updates and validation-based selection."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, fields
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np
import optax
from tqdm import tqdm

from dgnet.analysis.errors import relative_l2_array
from dgnet.errors import ConfigError, NonFiniteGradientError, NonPhysicalStateError
from dgnet.settings import PRECISIONS
from dgnet.solver.timestep import rollout
from dgnet.surrogate.dgnet import surrogate_tangent_fn
from dgnet.surrogate.network import SurrogateParams
from dgnet.surrogate.normalize import compute_dtype
from dgnet.training.dataset import SnapshotDataset, sample_window
from dgnet.training.losses import (
    Batch,
    MCTargets,
    StageModel,
    loss_naive,
    mc_objective,
    prepare_mc_batch,
    window_batch,
)

logger = logging.getLogger(__name__)

TRAIN_MODES = ("naive", "model-constrained")


@dataclass
class TrainConfig:
    mode: str = "model-constrained"
    delta: float = 0.005
    alpha: float | None = None
    window: int = 10
    learning_rate: float = 1e-3
    epochs: int = 5000
    cadence: int = 10
    rho_min: float = 0.1
    rho_max: float = 50.0
    seed: int = 0
    precision: str = "double"
    components: tuple[int, ...] | None = None
    validation_components: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.mode not in TRAIN_MODES:
            raise ConfigError(f"mode must be one of {TRAIN_MODES}", path="train.mode")
        if self.delta < 0:
            raise ConfigError("delta must be >= 0", path="train.delta")
        if self.window < 1:
            raise ConfigError("window must be >= 1", path="train.window")
        if self.cadence < 1:
            raise ConfigError("cadence must be >= 1", path="train.cadence")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0", path="train.epochs")
        if not self.rho_min < self.rho_max:
            raise ConfigError("rho_min must be below rho_max", path="train.rho_min")
        if self.precision not in PRECISIONS:
            raise ConfigError(f"precision must be one of {PRECISIONS}", path="train.precision")

    @property
    def rho_bounds(self) -> tuple[float, float]:
        return (self.rho_min, self.rho_max)

    @classmethod
    def from_settings(cls, **overrides) -> TrainConfig:
        from dgnet.settings import get_settings
        settings = get_settings()
        known = {f.name for f in fields(cls)}
        values = {k: v for k, v in vars(settings.training).items() if k in known}
        values["precision"] = settings.precision
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class HistoryRecord:
    epoch: int
    loss: float
    validation_error: float | None = None
    best_validation_error: float | None = None
    wall_time: float = 0.0


@dataclass
class TrainResult:
    best_params: SurrogateParams
    final_params: SurrogateParams
    best_error: float
    best_epoch: int
    history: list[HistoryRecord] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """One dataset with the stage model of its γ."""

    dataset: SnapshotDataset
    model: StageModel


def compute_gradients(loss_fn: Callable, params: SurrogateParams):
    """Loss value and reverse-mode gradient with respect to params.weights.

    Args:
        loss_fn: weights -> scalar loss.

    Raises:
        NonFiniteGradientError: some gradient block holds NaN or Inf.
    """
    loss, grads = jax.value_and_grad(loss_fn)(params.weights)
    check_gradients(grads)
    return loss, grads


def check_gradients(grads) -> None:
    for block, layer in grads.items():
        for name, g in layer.items():
            if not bool(jnp.all(jnp.isfinite(g))):
                raise NonFiniteGradientError(block=f"{block}/{name}")


def make_optimizer(learning_rate: float = 1e-3) -> optax.GradientTransformation:
    """ADAM with default moment decays and epsilon."""
    return optax.adam(learning_rate)


def adam_step(params: SurrogateParams, grads, state, optimizer: optax.GradientTransformation):
    """One ADAM update; returns (params, state)."""
    updates, state = optimizer.update(grads, state, params.weights)
    return params.with_weights(optax.apply_updates(params.weights, updates)), state


def make_validator(
    model: StageModel,
    reference: np.ndarray,
    components: tuple[int, ...] | None = None,
    t0: float = 0.0,
) -> Callable[[SurrogateParams], float]:
    """Mean relative L² error of a surrogate rollout from reference[0] against reference.

    The rollout uses the problem's limiter and no density clamp. A rollout
    that goes non-finite scores +inf. Entries where the reference norm of a
    component vanishes are left out of the mean.
    """
    reference = jnp.asarray(reference, dtype=model.dtype)
    n_steps = int(reference.shape[0]) - 1
    components = tuple(range(reference.shape[-1])) if components is None else tuple(components)
    defined = jnp.asarray(~np.isnan(np.asarray(relative_l2_array(reference, reference, model.mass, components))))
    if not bool(defined.any()):
        raise ValueError("reference has zero L2 norm in every validation component")
    n_defined = int(defined.sum())
    dg = model.dg
    compiled: dict = {}

    def scorer(spec):
        def score(weights):
            params = SurrogateParams(spec=spec, weights=weights)
            tangent = surrogate_tangent_fn(params, model.ops, dg.bcs, dg.flux_model, model.surrogate_mode)
            states, _ = rollout(reference[0], model.dt, n_steps, tangent, dg.limiter, t0)
            errors = relative_l2_array(states, reference, model.mass, components)
            return jnp.sum(jnp.where(defined, errors, 0.0)) / n_defined

        return jax.jit(score)

    def validate(params: SurrogateParams) -> float:
        if params.spec not in compiled:
            compiled[params.spec] = scorer(params.spec)
        value = float(compiled[params.spec](params.weights))
        return value if math.isfinite(value) else math.inf

    return validate


def _grad_functions(model: StageModel, spec, alpha: float | None):
    def naive(weights, u0, u1, u2, t):
        params = SurrogateParams(spec=spec, weights=weights)
        return loss_naive(model, params, _batch(u0, u1, u2, t))

    def constrained(weights, v, tu1, tu2, tt, u0, u1, u2, t):
        params = SurrogateParams(spec=spec, weights=weights)
        targets = _targets(v, tu1, tu2, tt)
        batch = _batch(u0, u1, u2, t) if alpha is not None else None
        return mc_objective(model, params, targets, batch, alpha)

    return jax.jit(jax.value_and_grad(naive)), jax.jit(jax.value_and_grad(constrained))


def _batch(u0, u1, u2, t):
    return Batch(u0=u0, u1=u1, u2=u2, t=t)


def _targets(v, u1, u2, t):
    return MCTargets(v=v, u1=u1, u2=u2, t=t, kept=())


def train_loop(
    cfg: TrainConfig,
    training_sets: list[TrainingSet],
    params: SurrogateParams,
    validate: Callable[[SurrogateParams], float] | None = None,
    progress: bool = True,
) -> TrainResult:
    """Train by random windows and ADAM, keeping the parameters with the lowest validation error.

    Validation runs before the first update (epoch 0), every ``cfg.cadence``
    epochs and after the last epoch. A validation that raises or returns a
    non-finite value scores +inf and training continues.

    Parameters and windows are cast to the dtype of ``cfg.precision``; the
    stage models must be built at the same precision.

    Args:
        cfg: training configuration.
        training_sets: datasets with their stage models.
        params: initial parameters.
        validate: params -> average relative error; without it the final parameters are returned.
        progress: show a tqdm progress bar.

    Raises:
        ConfigError: no training data, windows that do not fit or a stage model of another precision.
        NonFiniteGradientError: a gradient block went non-finite.
    """
    if not training_sets:
        raise ConfigError("no training datasets", path="train.data")
    dtype = jnp.dtype(compute_dtype(cfg.precision))
    for item in training_sets:
        if cfg.window > item.dataset.n_steps:
            raise ConfigError(
                f"window {cfg.window} exceeds the {item.dataset.n_steps} steps of {item.dataset.name}",
                path="train.window",
            )
        if item.model.dtype != dtype:
            raise ConfigError(
                f"stage model of {item.dataset.name} computes in {item.model.dtype}, training precision is "
                f"{cfg.precision}",
                path="train.precision",
            )

    params = params.astype(dtype)
    optimizer = make_optimizer(cfg.learning_rate)
    opt_state = optimizer.init(params.weights)
    base_key = jax.random.PRNGKey(cfg.seed)
    grad_fns = [_grad_functions(item.model, params.spec, cfg.alpha) for item in training_sets]

    history: list[HistoryRecord] = []
    best_error, best_epoch, best_params = math.inf, 0, params
    start = time.perf_counter()

    def run_validation(epoch: int) -> float | None:
        nonlocal best_error, best_epoch, best_params
        if validate is None:
            return None
        try:
            error = float(validate(params))
        except (NonPhysicalStateError, FloatingPointError, ValueError) as exc:
            logger.warning("Validation blew up at epoch %d: %s", epoch, exc)
            error = math.inf
        if not math.isfinite(error):
            logger.warning("Validation error at epoch %d is not finite", epoch)
            error = math.inf
        if error < best_error:
            best_error, best_epoch, best_params = error, epoch, params
        return error

    error0 = run_validation(0)
    history.append(HistoryRecord(0, math.nan, error0, _best(best_error, error0), time.perf_counter() - start))
    logger.info("Training %s for %d epochs on %d datasets", cfg.mode, cfg.epochs, len(training_sets))

    for epoch in tqdm(range(1, cfg.epochs + 1), desc="Training", disable=not progress):
        key = jax.random.fold_in(base_key, epoch)
        k_set, k_window, k_noise = jax.random.split(key, 3)
        index = int(jax.random.randint(k_set, (), 0, len(training_sets)))
        item = training_sets[index]
        naive_fn, constrained_fn = grad_fns[index]
        batch = window_batch(item.dataset, *sample_window(item.dataset, cfg.window, k_window), dtype=dtype)

        loss = math.nan
        grads = None
        if cfg.mode == "naive":
            loss, grads = naive_fn(params.weights, batch.u0, batch.u1, batch.u2, batch.t)
        else:
            try:
                targets = prepare_mc_batch(item.model, batch, cfg.delta, k_noise)
            except NonPhysicalStateError as exc:
                logger.warning("Skipping epoch %d: %s", epoch, exc)
            else:
                loss, grads = constrained_fn(
                    params.weights, targets.v, targets.u1, targets.u2, targets.t,
                    batch.u0, batch.u1, batch.u2, batch.t,
                )
        if grads is not None:
            check_gradients(grads)
            params, opt_state = adam_step(params, grads, opt_state, optimizer)
            loss = float(loss)

        error = None
        if epoch % cfg.cadence == 0 or epoch == cfg.epochs:
            error = run_validation(epoch)
        history.append(HistoryRecord(epoch, loss, error, _best(best_error, error), time.perf_counter() - start))

    if validate is None:
        best_params, best_epoch = params, cfg.epochs
    logger.info("Training done: best validation error %.4g at epoch %d", best_error, best_epoch)
    return TrainResult(
        best_params=best_params,
        final_params=params,
        best_error=best_error,
        best_epoch=best_epoch,
        history=history,
    )


def _best(best_error: float, error: float | None) -> float | None:
    return None if error is None else best_error
