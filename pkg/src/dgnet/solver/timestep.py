"""Time integration: SSP-RK2 with stage capture, Backward Euler via Newton-GMRES, and drivers.

A tangent function has the signature ``tangent(u, t) -> F(u)`` and must be
traceable by JAX.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np
from jax.scipy.sparse.linalg import gmres
from tqdm import tqdm

from dgnet.errors import (
    ConfigError,
    GMRESStagnationError,
    IntegrationError,
    NewtonConvergenceError,
    NonPhysicalStateError,
)
from dgnet.solver.limiter import LimiterConfig, apply_limiter

logger = logging.getLogger(__name__)

Tangent = Callable[[jnp.ndarray, float], jnp.ndarray]
# sink(index, t, state)
Sink = Callable[[int, float, np.ndarray], None]

SCHEMES = ("ssp-rk2", "backward-euler")
JVP_MODES = ("autodiff", "finite-difference")

# GMRES solves that reduce the residual by less than this are stagnant
_STAGNATION_RATIO = 0.9


@dataclass(frozen=True)
class StepRecord:
    """One SSP-RK2 step: input u0, stage u1 and accepted state u2."""

    u0: jnp.ndarray
    u1: jnp.ndarray
    u2: jnp.ndarray
    dt: float


@dataclass(frozen=True)
class ImplicitConfig:
    newton_tol: float = 1e-10
    max_newton: int = 50
    gmres_rtol: float = 1e-8
    restart: int = 30
    jvp: str = "autodiff"

    def __post_init__(self):
        if self.newton_tol <= 0 or self.gmres_rtol <= 0:
            raise ConfigError("Newton and GMRES tolerances must be positive", path="implicit")
        if self.jvp not in JVP_MODES:
            raise ConfigError(f"jvp must be one of {JVP_MODES}", path="implicit.jvp")

    @classmethod
    def from_settings(cls, **overrides) -> ImplicitConfig:
        from dgnet.settings import get_settings
        settings = get_settings()
        values = dict(
            newton_tol=settings.newton_tol,
            max_newton=settings.implicit.max_newton,
            gmres_rtol=settings.gmres_rtol,
            restart=settings.implicit.restart,
            jvp=settings.implicit.jvp,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class NewtonResult:
    state: jnp.ndarray
    iterations: int
    residual: float
    history: tuple[float, ...] = field(default=())


def ssp_rk2_step(u, dt: float, tangent: Tangent, limiter: LimiterConfig | None = None, t: float = 0.0) -> StepRecord:
    """u1 = S(u0 + dt F(u0)); u2 = S(½(u1 + u0 + dt F(u1)))."""
    u1 = apply_limiter(u + dt * tangent(u, t), limiter)
    u2 = apply_limiter(0.5 * (u1 + u + dt * tangent(u1, t + dt)), limiter)
    return StepRecord(u0=u, u1=u1, u2=u2, dt=dt)


def jvp_product(tangent: Tangent, w, v, t, mode: str = "autodiff"):
    """Jacobian-vector product J_F(w) v, by forward-mode autodiff or a finite difference."""
    if mode == "autodiff":
        return jax.jvp(lambda z: tangent(z, t), (w,), (v,))[1]
    eps = jnp.sqrt(jnp.finfo(w.dtype).eps) * (1.0 + jnp.linalg.norm(w))
    h = eps / jnp.maximum(jnp.linalg.norm(v), jnp.finfo(w.dtype).tiny)
    return (tangent(w + h * v, t) - tangent(w, t)) / h


@partial(jax.jit, static_argnames=("tangent", "jvp_mode", "restart"))
def _newton_update(w, u, dt, t, rtol, tangent, jvp_mode, restart):
    residual = w - u - dt * tangent(w, t)

    def matvec(v):
        return v - dt * jvp_product(tangent, w, v, t, jvp_mode)

    delta, _ = gmres(matvec, -residual, tol=rtol, atol=0.0, restart=restart)
    linear = jnp.linalg.norm(matvec(delta) + residual) / jnp.maximum(
        jnp.linalg.norm(residual), jnp.finfo(w.dtype).tiny
    )
    return delta, linear


@partial(jax.jit, static_argnames=("tangent",))
def _implicit_residual(w, u, dt, t, tangent):
    return jnp.max(jnp.abs(w - u - dt * tangent(w, t)))


def backward_euler_step(u, dt: float, tangent: Tangent, cfg: ImplicitConfig | None = None, t: float = 0.0) -> NewtonResult:
    """Solve u* = u + dt F(u*, t + dt) by matrix-free Newton-GMRES from the guess u.

    Raises:
        NewtonConvergenceError: residual above tolerance after max_newton iterations.
        GMRESStagnationError: a linear solve made no progress or went non-finite.
    """
    cfg = cfg or ImplicitConfig()
    t_new = t + dt
    w = u
    history = []
    for iteration in range(cfg.max_newton + 1):
        res = float(_implicit_residual(w, u, dt, t_new, tangent))
        history.append(res)
        if not np.isfinite(res):
            break
        if res <= cfg.newton_tol:
            logger.debug("Newton converged in %d iterations (residual %.3e)", iteration, res)
            return NewtonResult(state=w, iterations=iteration, residual=res, history=tuple(history))
        if iteration == cfg.max_newton:
            break
        delta, linear = _newton_update(w, u, dt, t_new, cfg.gmres_rtol, tangent, cfg.jvp, cfg.restart)
        linear = float(linear)
        if not np.isfinite(linear) or linear > _STAGNATION_RATIO:
            raise GMRESStagnationError(residual=linear, newton_iteration=iteration)
        w = w + delta
    raise NewtonConvergenceError(iterations=len(history) - 1, residual=history[-1])


def _check(u, validate, step: int) -> None:
    if validate is None:
        ok = bool(jnp.all(jnp.isfinite(u)))
    else:
        ok = bool(jnp.all(validate(u)))
    if not ok:
        raise IntegrationError(step, "nonphysical or non-finite state")


def integrate(
    u0,
    dt: float,
    n_steps: int,
    scheme: str,
    tangent: Tangent,
    limiter: LimiterConfig | None = None,
    implicit: ImplicitConfig | None = None,
    sink: Sink | None = None,
    t0: float = 0.0,
    validate: Callable | None = None,
    progress: bool = False,
):
    """Advance u0 by n_steps fixed steps, emitting n_steps + 1 snapshots to sink.

    Args:
        u0: initial state.
        dt: step size.
        n_steps: number of steps (>= 0).
        scheme: "ssp-rk2" or "backward-euler".
        tangent: tangent function.
        limiter: slope limiter, applied after each stage (explicit) or each accepted step (implicit).
        implicit: Newton-GMRES settings for backward Euler.
        sink: snapshot consumer, called as sink(index, t, state).
        t0: initial time.
        validate: state -> boolean mask of valid nodes; defaults to a finiteness check.
        progress: show a tqdm progress bar.

    Returns:
        The final state.

    Raises:
        IntegrationError: a step failed, with its index; the cause is chained.
    """
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown time scheme {scheme!r}, expected one of {SCHEMES}", path="scheme")
    if n_steps < 0:
        raise ConfigError("n_steps must be >= 0", path="n_steps")

    if scheme == "ssp-rk2":
        step_fn = jax.jit(lambda u, t: ssp_rk2_step(u, dt, tangent, limiter, t).u2)
    else:
        cfg = implicit or ImplicitConfig.from_settings()
        limit = jax.jit(lambda u: apply_limiter(u, limiter))

        def step_fn(u, t):
            return limit(backward_euler_step(u, dt, tangent, cfg, t).state)

    u = jnp.asarray(u0)
    if sink is not None:
        sink(0, t0, np.asarray(u))
    for i in tqdm(range(1, n_steps + 1), desc=scheme, disable=not progress):
        t = t0 + (i - 1) * dt
        try:
            u = step_fn(u, t)
        except (NonPhysicalStateError, NewtonConvergenceError, GMRESStagnationError) as exc:
            raise IntegrationError(i, str(exc)) from exc
        _check(u, validate, i)
        if sink is not None:
            sink(i, t0 + i * dt, np.asarray(u))
    return u


def rollout(u0, dt: float, n_steps: int, tangent: Tangent, limiter: LimiterConfig | None = None, t0: float = 0.0,
            post_stage: Callable | None = None):
    """Traceable SSP-RK2 trajectory via lax.scan.

    Args:
        post_stage: optional map applied to each stage after the limiter.

    Returns:
        (states, stage1): states (n_steps + 1, ...) including u0, stage1 (n_steps, ...).
    """

    def stage(u):
        return post_stage(u) if post_stage is not None else u

    def body(carry, i):
        u = carry
        t = t0 + i * dt
        u1 = stage(apply_limiter(u + dt * tangent(u, t), limiter))
        u2 = stage(apply_limiter(0.5 * (u1 + u + dt * tangent(u1, t + dt)), limiter))
        return u2, (u2, u1)

    _, (states, stage1) = jax.lax.scan(body, u0, jnp.arange(n_steps))
    return jnp.concatenate([u0[None], states], axis=0), stage1


def steps_for(T: float, dt: float) -> int:
    """Number of fixed steps covering [0, T]."""
    n = int(round(T / dt))
    if n < 0 or abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise ConfigError(f"T={T} is not a multiple of dt={dt}", path="T")
    return n
