"""Relative and absolute L² errors and observed convergence rates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import jax.numpy as jnp
import numpy as np

from dgnet.dg.operators import DGOperators


@dataclass
class ErrorSeries:
    """Per-step errors (n, c) for the listed components, plus an optional indicator series."""

    errors: np.ndarray
    components: tuple[int, ...]
    indicator: np.ndarray | None = None
    truncated_at: int | None = None

    @property
    def mean(self) -> np.ndarray:
        """Per-step average over components."""
        return self.errors.mean(axis=1)

    def __len__(self) -> int:
        return int(self.errors.shape[0])


def _l2_squared_per_component(e, mass):
    """(..., K, Np, m) -> (..., m) of Σ_k eᵀ M^k e."""
    return jnp.einsum("...knm,knl,...klm->...m", e, mass, e)


def relative_l2_array(pred, ref, mass, components):
    """Traceable per-step relative errors (n, c); NaN where the reference norm vanishes."""
    idx = jnp.asarray(components)
    num = _l2_squared_per_component(pred - ref, mass)[..., idx]
    den = _l2_squared_per_component(ref, mass)[..., idx]
    return jnp.where(den > 0, jnp.sqrt(num / jnp.where(den > 0, den, 1.0)), jnp.nan)


def nonzero_components(ref, mass, components=None) -> tuple[int, ...]:
    """Components whose reference norm is positive at every step (a quiescent start has zero momentum)."""
    ref = jnp.asarray(ref)
    if ref.ndim == 3:
        ref = ref[None]
    components = range(ref.shape[-1]) if components is None else components
    den = np.asarray(_l2_squared_per_component(ref, mass))
    return tuple(int(c) for c in components if np.all(den[..., c] > 0))


def relative_l2(pred, ref, mass, components=None) -> ErrorSeries:
    """‖pred − ref‖_{L²} / ‖ref‖_{L²} per step and component.

    Args:
        pred: predicted snapshots (n, K, Np, m).
        ref: reference snapshots, same shape.
        mass: element mass matrices (K, Np, Np).
        components: component indices; all when None.

    Raises:
        ValueError: shape mismatch or a zero reference norm.
    """
    pred, ref = jnp.asarray(pred), jnp.asarray(ref)
    if pred.shape != ref.shape:
        raise ValueError(f"prediction shape {pred.shape} does not match reference {ref.shape}")
    if pred.ndim == 3:
        pred, ref = pred[None], ref[None]
    components = tuple(range(ref.shape[-1])) if components is None else tuple(components)
    den = np.asarray(_l2_squared_per_component(ref, mass))[..., list(components)]
    if np.any(den <= 0):
        step = int(np.argwhere(den <= 0)[0][0])
        raise ValueError(f"reference has zero L2 norm at step {step}")
    errors = np.asarray(relative_l2_array(pred, ref, mass, components))
    return ErrorSeries(errors=errors, components=components)


def l2_error_exact(u, ops: DGOperators, exact: Callable, t: float, component: int = 0) -> float:
    """Absolute L² error of one component against an analytic field, by the over-integration rule.

    Args:
        u: nodal state (K, Np, m).
        ops: operators of the mesh (either mode; the basis carries the rule).
        exact: (x (..., d), t) -> conservative state (..., m).
        t: time.
        component: component index.
    """
    basis = ops.basis
    x_q = np.einsum("qn,knd->kqd", basis.quad_interp, ops.x)
    u_q = jnp.einsum("qn,kn->kq", basis.quad_interp, jnp.asarray(u)[..., component])
    e = u_q - exact(x_q, t)[..., component]
    weights = jnp.asarray(ops.det)[:, None] * jnp.asarray(basis.quad_weights)[None, :]
    return float(jnp.sqrt(jnp.sum(weights * e * e)))


def convergence_rates(errors, h=None) -> float:
    """Least-squares slope of log(error) against log(h).

    Args:
        errors: errors on successively refined meshes.
        h: mesh sizes; halving sizes 1, 1/2, 1/4, ... when None.

    Raises:
        ValueError: fewer than 2 levels or non-positive errors.
    """
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size < 2:
        raise ValueError("at least two mesh levels are needed")
    if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        raise ValueError("errors must be positive and finite")
    h = 0.5 ** np.arange(errors.size) if h is None else np.asarray(h, dtype=np.float64)
    if h.shape != errors.shape or np.any(h <= 0):
        raise ValueError("h must be positive with one entry per error")
    slope, _ = np.polyfit(np.log(h), np.log(errors), 1)
    return float(slope)


def pairwise_rates(errors, h=None) -> list[float]:
    """Rates between consecutive levels, log(e_i/e_{i+1}) / log(h_i/h_{i+1})."""
    errors = np.asarray(errors, dtype=np.float64)
    h = 0.5 ** np.arange(errors.size) if h is None else np.asarray(h, dtype=np.float64)
    return [float(np.log(errors[i] / errors[i + 1]) / np.log(h[i] / h[i + 1])) for i in range(errors.size - 1)]
