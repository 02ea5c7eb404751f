"""Snapshot datasets: DG trajectories with their stored SSP-RK2 stages."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import jax
import jax.numpy as jnp
import numpy as np
from tqdm import tqdm

from dgnet.errors import ConfigError, DGNetError, IntegrationError
from dgnet.output.frames import FrameWriter, read_frames
from dgnet.solver.setup import Discretization, discretize_problem
from dgnet.solver.timestep import ssp_rk2_step, steps_for

logger = logging.getLogger(__name__)

DATASET_SCHEMA = "dgnet-dataset/1"


@dataclass
class SnapshotDataset:
    """Snapshots u^{i,0} (n, K, Np, m) with stage-1 values u^{i,1} (n-1, K, Np, m).

    The accepted stage u^{i,2} of step i is the next snapshot u^{i+1,0}.
    """

    states: np.ndarray
    stage1: np.ndarray
    dt: float
    metadata: dict = field(default_factory=dict)

    @property
    def n_snapshots(self) -> int:
        return int(self.states.shape[0])

    @property
    def n_steps(self) -> int:
        return int(self.stage1.shape[0])

    @property
    def stage2(self) -> np.ndarray:
        return self.states[1:]

    @property
    def gamma(self) -> float:
        return float(self.metadata.get("gamma", 1.4))

    @property
    def times(self) -> np.ndarray:
        t0 = float(self.metadata.get("t0", 0.0))
        return t0 + self.dt * np.arange(self.n_snapshots)

    @property
    def name(self) -> str:
        meta = self.metadata
        return f"{meta.get('problem', 'data')}-m{meta.get('member', 0)}-g{meta.get('gamma', 0)}"


def make_step(disc: Discretization, dt: float):
    """Jitted SSP-RK2 step (u, t) -> (u1, u2) on the discretization's tangent and limiter."""

    @jax.jit
    def step(u, t):
        record = ssp_rk2_step(u, dt, disc.tangent, disc.limiter, t)
        return record.u1, record.u2

    return step


def generate_trajectory(disc: Discretization, u0, T: float, dt: float, metadata: dict | None = None,
                        progress: bool = False) -> SnapshotDataset:
    """Run SSP-RK2 from u0 over [0, T], storing every snapshot and stage 1.

    Raises:
        IntegrationError: non-finite or nonphysical state, with the step index.
    """
    n_steps = steps_for(T, dt)
    step = make_step(disc, dt)
    u = jnp.asarray(u0)
    states = [np.asarray(u)]
    stage1 = []
    desc = (metadata or {}).get("problem", "trajectory")
    for i in tqdm(range(n_steps), desc=f"Generating {desc}", disable=not progress):
        u1, u = step(u, i * dt)
        u1_host, u_host = np.asarray(u1), np.asarray(u)
        if not (np.all(disc.flux_model.is_valid(u1_host)) and np.all(disc.flux_model.is_valid(u_host))):
            raise IntegrationError(i + 1, "DG solution blew up during dataset generation")
        stage1.append(u1_host)
        states.append(u_host)
    meta = {
        "flux": disc.flux_model.scheme,
        "gamma": disc.gamma,
        "quadrature": disc.ops.mode,
        "N": disc.ops.N,
        "K": disc.ops.K,
        "dim": disc.mesh.dim,
        "limiter": disc.limiter is not None and disc.limiter.enabled,
        "T": T,
        "t0": 0.0,
    }
    meta.update(metadata or {})
    stage_shape = (0,) + states[0].shape
    return SnapshotDataset(
        states=np.stack(states),
        stage1=np.stack(stage1) if stage1 else np.zeros(stage_shape),
        dt=dt,
        metadata=meta,
    )


def generate_dataset(
    problem_id: str,
    gammas: list[float] | None = None,
    T: float | None = None,
    dt: float | None = None,
    N: int | None = None,
    flux: str | None = None,
    mode: str = "over-integration",
    mesh_path: Path | None = None,
    K: int | None = None,
    level: int = 0,
    members: list[int] | None = None,
    progress: bool = False,
) -> list[SnapshotDataset]:
    """One dataset per (family member, γ) of a catalog problem.

    Args:
        problem_id: catalog id.
        gammas: gas constants; the catalog's train_gammas by default.
        T: horizon; the catalog's t_train by default.
        dt: step; the catalog's dt by default.
        N: order override.
        flux: numerical flux scheme ("lax-friedrichs" or "hll").
        mode: quadrature mode of the generating solver.
        mesh_path: mesh file override.
        K: element count override for 1D meshes.
        level: refinement level for generated 2D meshes.
        members: family members to generate; all by default.
        progress: show progress bars.
    """
    first = discretize_problem(problem_id, N=N, mode=mode, flux=flux, mesh_path=mesh_path, K=K, level=level)
    problem = first.problem
    gammas = problem.train_gammas if gammas is None else list(gammas)
    T = problem.t_train if T is None else T
    dt = problem.dt if dt is None else dt
    members = list(range(problem.n_members)) if members is None else members
    if not gammas:
        raise ConfigError("at least one gamma is required", path="gammas")

    datasets = []
    for gamma in gammas:
        disc = first if gamma == first.gamma else discretize_problem(
            problem_id, N=N, mode=mode, gamma=gamma, flux=flux, mesh_path=mesh_path, K=K, level=level
        )
        for member in members:
            meta = {"problem": problem_id, "member": member}
            datasets.append(generate_trajectory(disc, disc.initial(member), T, dt, meta, progress=progress))
            logger.info("Generated %s: %d snapshots", datasets[-1].name, datasets[-1].n_snapshots)
    return datasets


def save_dataset(dataset: SnapshotDataset, directory: Path) -> Path:
    """Write states.bin, stage1.bin and dataset.json into directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    times = dataset.times
    with FrameWriter(directory / "states.bin", dt=dataset.dt) as writer:
        for t, state in zip(times, dataset.states):
            writer.write(t, state)
    with FrameWriter(directory / "stage1.bin", dt=dataset.dt) as writer:
        for t, state in zip(times[:-1], dataset.stage1):
            writer.write(t, state)
    meta = {"schema": DATASET_SCHEMA, "dt": dataset.dt, "n_snapshots": dataset.n_snapshots, **dataset.metadata}
    (directory / "dataset.json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    return directory


def load_dataset(directory: Path) -> SnapshotDataset:
    """Read a dataset directory written by save_dataset.

    Raises:
        DGNetError: missing files, wrong schema or inconsistent frame counts.
    """
    directory = Path(directory)
    meta_path = directory / "dataset.json"
    if not meta_path.exists():
        raise DGNetError(f"not a dataset directory: {directory}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if meta.pop("schema", None) != DATASET_SCHEMA:
        raise DGNetError(f"unsupported dataset schema in {meta_path}")
    dt = float(meta.pop("dt"))
    n = int(meta.pop("n_snapshots"))
    _, states = read_frames(directory / "states.bin")
    _, stage1 = read_frames(directory / "stage1.bin")
    if states.shape[0] != n or stage1.shape[0] != max(n - 1, 0):
        raise DGNetError(f"dataset {directory} holds {states.shape[0]} snapshots, expected {n}")
    if stage1.shape[0] == 0:
        stage1 = np.zeros((0,) + states.shape[1:])
    return SnapshotDataset(states=states, stage1=stage1, dt=dt, metadata=meta)


def sample_window(dataset: SnapshotDataset, size: int, key) -> tuple[int, int]:
    """Uniform random start of ``size`` consecutive steps; returns (start, stop).

    Raises:
        ValueError: size < 1 or larger than the number of stored steps.
    """
    if size < 1:
        raise ValueError("window size must be >= 1")
    if size > dataset.n_steps:
        raise ValueError(f"window of {size} steps does not fit {dataset.n_steps} stored steps")
    start = int(jax.random.randint(key, (), 0, dataset.n_steps - size + 1))
    return start, start + size
