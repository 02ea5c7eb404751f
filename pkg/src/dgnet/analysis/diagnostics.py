"""Generalization diagnostics: normalized wave-speed profiles, input-density histograms and Cp."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import jax
import jax.numpy as jnp
import numpy as np
from tqdm import tqdm

from dgnet.physics.euler import pressure
from dgnet.surrogate.dgnet import face_inputs
from dgnet.surrogate.network import SurrogateParams, mlp_forward
from dgnet.surrogate.normalize import BETA_DOUBLE, normalize_face_triple

logger = logging.getLogger(__name__)

GRID_RESOLUTION = 200
JUMP_MASK = 1e-6
HISTOGRAM_EPOCHS = 5


@dataclass
class WaveSpeedPlane:
    """λ̄ on one face of the input hypercube where component ``fixed`` equals ``sign``.

    Attributes:
        fixed: index of the pinned triple component (the jump is the last one).
        sign: +1 or −1.
        axes: grid coordinates of the free components, in triple order.
        values: λ̄ on the grid, NaN where masked.
        mask: True where |normalized jump| < the threshold.
    """

    fixed: int
    sign: int
    axes: tuple[int, ...]
    grid: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    @property
    def name(self) -> str:
        return f"plane{self.fixed}{'+' if self.sign > 0 else '-'}"


def flux_network_fn(params: SurrogateParams) -> Callable:
    """Ψ_flux as a function on normalized triples (..., d + 1) -> (...)."""
    return lambda triple: mlp_forward(params.flux, triple)[..., 0]


def wave_speed_profile(
    flux_network: Callable | SurrogateParams,
    d: int,
    resolution: int = GRID_RESOLUTION,
    threshold: float = JUMP_MASK,
) -> list[WaveSpeedPlane]:
    """λ̄ = (Ψ_flux(triple) − Σ_i averages) / jump on every face of [−1, 1]^{d+1}.

    Args:
        flux_network: normalized-triple flux, or parameters whose Ψ_flux is used.
        d: spatial dimension.
        resolution: grid points per free axis (>= 2).
        threshold: cells with |jump| below it are masked.
    """
    if resolution < 2:
        raise ValueError("grid resolution must be >= 2 per axis")
    if isinstance(flux_network, SurrogateParams):
        flux_network = flux_network_fn(flux_network)

    n = d + 1
    line = np.linspace(-1.0, 1.0, resolution)
    planes = []
    for fixed in range(n):
        axes = tuple(i for i in range(n) if i != fixed)
        mesh = np.meshgrid(*([line] * len(axes)), indexing="ij")
        for sign in (1, -1):
            triple = np.empty(mesh[0].shape + (n,))
            triple[..., fixed] = sign
            for axis, values in zip(axes, mesh):
                triple[..., axis] = values
            jump = triple[..., -1]
            mask = np.abs(jump) < threshold
            out = np.asarray(flux_network(jnp.asarray(triple)))
            central = triple[..., :-1].sum(axis=-1)
            safe_jump = np.where(mask, 1.0, jump)
            values = np.where(mask, np.nan, (out - central) / safe_jump)
            planes.append(WaveSpeedPlane(fixed, sign, axes, line, values, mask))
    logger.debug("Wave-speed profile: %d planes, %d masked cells", len(planes), sum(int(p.mask.sum()) for p in planes))
    return planes


def face_triples(
    states: Iterable,
    ops,
    bcs,
    flux_model,
    times: Iterable[float] | None = None,
    beta: float = BETA_DOUBLE,
    delta: float = 0.0,
    key=None,
    epochs: int = 1,
    progress: bool = False,
) -> Iterator[np.ndarray]:
    """Normalized face triples (K·Nf·Ne·m, d + 1) of every snapshot.

    With delta > 0 each of ``epochs`` passes draws fresh multiplicative noise
    per snapshot before the triples are formed.
    """
    from dgnet.training.randomize import randomize

    states = list(states)
    times = [0.0] * len(states) if times is None else list(times)
    d = ops.dim

    @jax.jit
    def triples(u, t):
        avg, jump, _, _ = face_inputs(u, ops, bcs, flux_model, t)
        return normalize_face_triple(avg, jump, beta).values.reshape(-1, d + 1)

    n_passes = epochs if delta > 0 else 1
    if delta > 0 and key is None:
        raise ValueError("a PRNG key is needed for randomized triples")
    for epoch in range(n_passes):
        for i, (u, t) in enumerate(tqdm(list(zip(states, times)), desc=f"Triples pass {epoch}", disable=not progress)):
            u = jnp.asarray(u)
            if delta > 0:
                u = randomize(u, delta, jax.random.fold_in(jax.random.fold_in(key, epoch), i))
            yield np.asarray(triples(u, t))


@dataclass
class DensityHistogram:
    """Per dominant component k: counts over the other d components on a [−1, 1]^d grid.

    Attributes:
        counts: raw counts, one array of shape (resolution,)*d per set.
        density: counts divided by the global maximum count.
    """

    counts: list[np.ndarray]
    density: list[np.ndarray]
    resolution: int

    @property
    def total(self) -> int:
        return int(sum(c.sum() for c in self.counts))

    def occupied(self) -> list[np.ndarray]:
        return [c > 0 for c in self.counts]

    @property
    def n_occupied(self) -> int:
        return int(sum(o.sum() for o in self.occupied()))


def input_density_histogram(triples: Iterable[np.ndarray], resolution: int = GRID_RESOLUTION) -> DensityHistogram:
    """Bin each triple into the set of its largest-magnitude component.

    The remaining components are binned on a resolution^d grid over
    [−1, 1]^d; densities are normalized by the maximum count over all sets.

    Raises:
        ValueError: empty stream.
    """
    counts = None
    edges = None
    n_samples = 0
    for batch in triples:
        batch = np.asarray(batch).reshape(-1, np.shape(batch)[-1])
        n = batch.shape[1]
        if counts is None:
            counts = [np.zeros((resolution,) * (n - 1), dtype=np.int64) for _ in range(n)]
            edges = [np.linspace(-1.0, 1.0, resolution + 1)] * (n - 1)
        dominant = np.argmax(np.abs(batch), axis=1)
        for k in range(n):
            rest = np.delete(batch[dominant == k], k, axis=1)
            if rest.size:
                h, _ = np.histogramdd(np.clip(rest, -1.0, 1.0), bins=edges)
                counts[k] += h.astype(np.int64)
        n_samples += batch.shape[0]
    if counts is None or n_samples == 0:
        raise ValueError("empty triple stream")
    peak = max(int(c.max()) for c in counts)
    density = [c / peak for c in counts]
    logger.info("Histogram of %d samples, peak count %d", n_samples, peak)
    return DensityHistogram(counts=counts, density=density, resolution=resolution)


def pressure_coefficient(u, free_stream, gamma: float = 1.4):
    """Cp = (p − p₀) / (½ ρ₀ |v₀|²) at every node.

    Args:
        u: conservative state (..., m).
        free_stream: primitive free-stream state (ρ₀, velocity..., p₀).
        gamma: ratio of specific heats.

    Raises:
        ValueError: zero free-stream speed.
    """
    free_stream = np.asarray(free_stream, dtype=np.float64)
    rho0, vel0, p0 = free_stream[0], free_stream[1:-1], free_stream[-1]
    dynamic = 0.5 * rho0 * float(np.dot(vel0, vel0))
    if dynamic <= 0:
        raise ValueError("free-stream dynamic pressure must be positive")
    return (pressure(jnp.asarray(u), gamma) - p0) / dynamic
