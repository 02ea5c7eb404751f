"""CLI entry point: solve, data generation, training and analysis subcommands."""

from __future__ import annotations

import contextlib
import logging
import math
import os
import sys
import time
from pathlib import Path

import click

logger = logging.getLogger(__name__)

_QUIET_LOGGERS = ("jax", "absl")


def _setup_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )
    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)


def _set_threads(threads: int) -> None:
    os.environ["DGNET_THREADS"] = str(threads)
    flags = os.environ.get("XLA_FLAGS", "")
    os.environ["XLA_FLAGS"] = (
        f"{flags} --xla_cpu_multi_thread_eigen={'true' if threads > 1 else 'false'} "
        f"intra_op_parallelism_threads={threads}"
    ).strip()


@contextlib.contextmanager
def _exit_on_error():
    """Map dgnet errors to exit codes: 2 for config and input errors, 3 for numerical failures."""
    from dgnet.errors import BasisError, CheckpointError, ConfigError, DGNetError, MeshError, NumericalError

    try:
        yield
    except (ConfigError, MeshError, CheckpointError, BasisError) as e:
        click.secho(f"Error: {e}", fg="red", err=True)
        sys.exit(2)
    except NumericalError as e:
        cause = f" (caused by: {e.__cause__})" if e.__cause__ is not None else ""
        click.secho(f"Numerical failure: {e}{cause}", fg="red", err=True)
        sys.exit(3)
    except DGNetError as e:
        click.secho(f"Error: {e}", fg="red", err=True)
        sys.exit(2)


def _config_option(f):
    return click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
                        help="YAML or JSON run config; flags override its values.")(f)


def _out_option(f):
    return click.option("--out", default=None, help="Output directory (default: <data_dir>/<command>-<timestamp>).")(f)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable debug logging.")
@click.option("--threads", default=None, type=click.IntRange(min=1), help="Cap worker threads.")
@click.pass_context
def main(ctx, verbose, threads):
    """dgnet: differentiable DG solver for the Euler equations and DGNet surrogate training."""
    _setup_logging(verbose)

    if threads:
        _set_threads(threads)

    from dgnet.settings import get_settings, reset_settings
    reset_settings()
    with _exit_on_error():
        get_settings()

    ctx.ensure_object(dict)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


@main.command()
@_config_option
@click.option("--problem", default=None, help="Problem id from the catalog.")
@click.option("--engine", default=None, type=click.Choice(["dg", "dgnet"]), help="Tangent: DG or the surrogate.")
@click.option("--scheme", default=None, type=click.Choice(["ssp-rk2", "backward-euler"]))
@click.option("--N", "N", default=None, type=int, help="Polynomial order.")
@click.option("--K", "K", default=None, type=int, help="Element count (1D meshes).")
@click.option("--level", default=None, type=int, help="Refinement level (generated 2D meshes).")
@click.option("--T", "T", default=None, type=float, help="Final time (default: the problem's test horizon).")
@click.option("--dt", default=None, type=float, help="Time step.")
@click.option("--gamma", default=None, type=float)
@click.option("--flux", default=None, type=click.Choice(["lax-friedrichs", "hll"]))
@click.option("--quadrature", default=None, type=click.Choice(["collocation", "over-integration"]))
@click.option("--limiter/--no-limiter", default=None)
@click.option("--mesh", default=None, help="Mesh file (gmsh ASCII v2 or JSON).")
@click.option("--checkpoint", default=None, help="Surrogate checkpoint for --engine dgnet.")
@click.option("--surrogate-mode", default=None, type=click.Choice(["learned", "flux-oracle"]))
@click.option("--member", default=None, type=int, help="Family member of the initial condition.")
@_out_option
def solve(config_path, problem, engine, scheme, N, K, level, T, dt, gamma, flux, quadrature, limiter, mesh,
          checkpoint, surrogate_mode, member, out):
    """Integrate a catalog problem with the DG or the surrogate tangent."""
    from dgnet.runconfig import load_run_config, to_dict

    with _exit_on_error():
        cfg = load_run_config("solve", config_path, dict(
            problem=problem, engine=engine, scheme=scheme, N=N, K=K, level=level, T=T, dt=dt, gamma=gamma,
            flux=flux, quadrature=quadrature, limiter=limiter, mesh=mesh, checkpoint=checkpoint,
            surrogate_mode=surrogate_mode, member=member, out=out,
        ))
        summary = _run_solve(cfg, to_dict(cfg))

    click.echo(f"Solved {summary['problem']}: {summary['n_steps']} steps to t={summary['T']:.6g}")
    if summary["exact_error"] is not None:
        click.echo(f"  Relative L2 density error vs exact: {summary['exact_error']:.6e}")
    click.echo(f"Artifacts: {summary['run_dir']}")


def _run_solve(cfg, config: dict) -> dict:
    import jax

    from dgnet.output import FrameWriter, run_directory, save_summary, write_frame_csv, write_manifest
    from dgnet.solver import ImplicitConfig, discretize_problem, integrate, steps_for

    start = time.perf_counter()
    mode = cfg.quadrature or ("collocation" if cfg.engine == "dgnet" else None)
    disc = discretize_problem(cfg.problem, N=cfg.N, mode=mode, gamma=cfg.gamma, flux=cfg.flux,
                              mesh_path=cfg.mesh, K=cfg.K, level=cfg.level, limiter=cfg.limiter)
    T = disc.problem.t_test if cfg.T is None else cfg.T
    dt = disc.problem.dt if cfg.dt is None else cfg.dt
    n_steps = steps_for(T, dt)

    tangent = disc.tangent
    if cfg.engine == "dgnet":
        from dgnet.surrogate import init_params, load_params, surrogate_tangent_fn
        disc = disc.with_mode("collocation")
        if cfg.checkpoint:
            params = load_params(cfg.checkpoint)
        else:
            params = init_params(jax.random.PRNGKey(0), disc.mesh.dim, disc.ops.n_p)
        tangent = surrogate_tangent_fn(params, disc.ops, disc.bcs, disc.flux_model, cfg.surrogate_mode)

    implicit = ImplicitConfig.from_settings() if cfg.scheme == "backward-euler" else None
    run_dir = run_directory("solve", cfg.out)
    meta = {"problem": cfg.problem, "engine": cfg.engine, "scheme": cfg.scheme, "gamma": disc.gamma}
    logger.info("Solving %s with %s/%s: K=%d, N=%d, %d steps", cfg.problem, cfg.engine, cfg.scheme,
                disc.ops.K, disc.ops.N, n_steps)
    with FrameWriter(run_dir / "frames.bin", dt=dt, metadata=meta) as writer:
        final = integrate(disc.initial(cfg.member), dt, n_steps, cfg.scheme, tangent, disc.limiter, implicit,
                          sink=writer, validate=disc.flux_model.is_valid, progress=True)
    if cfg.csv:
        write_frame_csv(run_dir / "final.csv", disc.ops.x, final)

    exact_error = _exact_error(disc, final, n_steps * dt)
    wall_time = time.perf_counter() - start
    write_manifest(run_dir, "solve", config, seeds={"init": 0}, wall_time=wall_time)
    summary = {
        "problem": cfg.problem,
        "engine": cfg.engine,
        "scheme": cfg.scheme,
        "K": disc.ops.K,
        "N": disc.ops.N,
        "n_steps": n_steps,
        "T": n_steps * dt,
        "dt": dt,
        "exact_error": exact_error,
        "run_dir": str(run_dir),
    }
    save_summary(run_dir, "solve", **summary)
    return summary


def _exact_error(disc, final, t: float) -> float | None:
    """Relative L² density error against the exact solution, where the problem has one."""
    import jax.numpy as jnp

    from dgnet.analysis import relative_l2
    from dgnet.physics.euler import primitive_to_conservative
    from dgnet.physics.problems import vortex_exact
    from dgnet.physics.reference import reference_solution

    problem = disc.problem
    if t <= 0:
        return None
    if problem.kind == "vortex":
        exact = vortex_exact(disc.ops.x, t, disc.gamma)
    elif problem.kind == "riemann" and problem.id in ("sod", "lax"):
        prim = reference_solution(problem.id, disc.ops.x[..., 0], t)
        exact = primitive_to_conservative(jnp.asarray(prim), disc.gamma)
    else:
        return None
    return float(relative_l2(final, exact, disc.ops.mass, components=(0,)).errors[0, 0])


# ---------------------------------------------------------------------------
# generate-data
# ---------------------------------------------------------------------------


@main.command("generate-data")
@_config_option
@click.option("--problem", default=None, help="Problem id (a family for several members).")
@click.option("--gammas", default=None, help="Comma-separated gas constants.")
@click.option("--members", default=None, help="Comma-separated family members.")
@click.option("--T", "T", default=None, type=float, help="Horizon (default: the problem's training horizon).")
@click.option("--dt", default=None, type=float)
@click.option("--N", "N", default=None, type=int)
@click.option("--K", "K", default=None, type=int)
@click.option("--level", default=None, type=int)
@click.option("--flux", default=None, type=click.Choice(["lax-friedrichs", "hll"]))
@click.option("--quadrature", default=None, type=click.Choice(["collocation", "over-integration"]))
@click.option("--mesh", default=None)
@_out_option
def generate_data(config_path, problem, gammas, members, T, dt, N, K, level, flux, quadrature, mesh, out):
    """Generate SSP-RK2 snapshot datasets (states and stage-1 values)."""
    from dgnet.runconfig import load_run_config, to_dict

    with _exit_on_error():
        cfg = load_run_config("generate-data", config_path, dict(
            problem=problem, gammas=gammas, members=members, T=T, dt=dt, N=N, K=K, level=level,
            flux=flux, quadrature=quadrature, mesh=mesh, out=out,
        ))
        summary = _run_generate(cfg, to_dict(cfg))

    click.echo(f"Generated {len(summary['datasets'])} datasets")
    click.echo(f"Artifacts: {summary['run_dir']}")


def _run_generate(cfg, config: dict) -> dict:
    from dgnet.output import run_directory, save_summary, write_csv, write_manifest
    from dgnet.training import generate_dataset, save_dataset

    start = time.perf_counter()
    datasets = generate_dataset(cfg.problem, gammas=cfg.gammas, T=cfg.T, dt=cfg.dt, N=cfg.N, flux=cfg.flux,
                                mode=cfg.quadrature, mesh_path=cfg.mesh, K=cfg.K, level=cfg.level,
                                members=cfg.members, progress=True)
    run_dir = run_directory("generate-data", cfg.out)
    rows = []
    for dataset in datasets:
        save_dataset(dataset, run_dir / dataset.name)
        meta = dataset.metadata
        rows.append((dataset.name, meta["member"], dataset.gamma, dataset.n_snapshots, dataset.dt))
    write_csv(run_dir / "datasets.csv", ("name", "member", "gamma", "snapshots", "dt"), rows)
    write_manifest(run_dir, "generate-data", config, wall_time=time.perf_counter() - start)
    summary = {
        "problem": cfg.problem,
        "datasets": [
            {"name": r[0], "member": r[1], "gamma": r[2], "snapshots": r[3]} for r in rows
        ],
        "dt": datasets[0].dt,
        "quadrature": cfg.quadrature,
        "run_dir": str(run_dir),
    }
    save_summary(run_dir, "generate-data", **summary)
    return summary


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


@main.command()
@_config_option
@click.option("--problem", default=None, help="Training problem (when no --data is given).")
@click.option("--data", "data", multiple=True, help="Dataset directory; repeat for several.")
@click.option("--mode", default=None, type=click.Choice(["naive", "model-constrained"]))
@click.option("--delta", default=None, type=float, help="Randomization level.")
@click.option("--alpha", default=None, type=float, help="Weight of the model-constrained term next to L_n.")
@click.option("--window", default=None, type=int, help="Snapshots per training window.")
@click.option("--epochs", default=None, type=int)
@click.option("--learning-rate", default=None, type=float)
@click.option("--cadence", default=None, type=int, help="Epochs between validations.")
@click.option("--seed", default=None, type=int)
@click.option("--init", default=None, help="Checkpoint to start from.")
@click.option("--N", "N", default=None, type=int)
@click.option("--K", "K", default=None, type=int)
@_out_option
def train(config_path, problem, data, mode, delta, alpha, window, epochs, learning_rate, cadence, seed, init,
          N, K, out):
    """Train a surrogate on snapshot datasets, selecting by validation error."""
    from dgnet.runconfig import load_run_config, to_dict

    with _exit_on_error():
        cfg = load_run_config("train", config_path, {
            "problem": problem, "data": list(data) or None, "init": init, "N": N, "K": K, "out": out,
            "train.mode": mode, "train.delta": delta, "train.alpha": alpha, "train.window": window,
            "train.epochs": epochs, "train.learning_rate": learning_rate, "train.cadence": cadence,
            "train.seed": seed,
        })
        summary = _run_train(cfg, to_dict(cfg))

    click.echo(f"Best validation error {summary['best_error']:.6g} at epoch {summary['best_epoch']}")
    click.echo(f"Artifacts: {summary['run_dir']}")


def _training_sets(cfg) -> list:
    from dgnet.solver import discretize_problem
    from dgnet.training import TrainingSet, build_stage_model, generate_dataset, load_dataset

    if cfg.data:
        datasets = [load_dataset(Path(p)) for p in cfg.data]
    else:
        datasets = generate_dataset(cfg.problem, gammas=cfg.gammas, N=cfg.N, mode=cfg.quadrature,
                                    mesh_path=cfg.mesh, K=cfg.K, level=cfg.level, members=cfg.members,
                                    progress=True)
    discs: dict = {}
    sets = []
    for dataset in datasets:
        meta = dataset.metadata
        key = (meta.get("problem"), meta.get("gamma"), meta.get("quadrature"), meta.get("N"), meta.get("K"))
        if key not in discs:
            discs[key] = discretize_problem(meta["problem"], N=meta.get("N"), mode=meta.get("quadrature"),
                                            gamma=meta.get("gamma"), flux=meta.get("flux"), mesh_path=cfg.mesh,
                                            K=meta.get("K"), level=cfg.level)
        model = build_stage_model(discs[key], dataset.dt, components=cfg.train.components,
                                  rho_bounds=cfg.train.rho_bounds, precision=cfg.train.precision)
        sets.append(TrainingSet(dataset=dataset, model=model))
    return sets


def _validator(cfg, sets):
    from dgnet.physics.problems import get_problem
    from dgnet.solver import discretize_problem
    from dgnet.training import build_stage_model, generate_trajectory, make_validator

    first = sets[0].dataset.metadata
    family = get_problem(first.get("problem", cfg.problem))
    entry = family.get("validation") or {}
    problem_id = cfg.validation_problem or entry.get("problem") or family.id
    gamma = cfg.validation_gamma or entry.get("gamma")
    disc = discretize_problem(problem_id, N=first.get("N"), mode=first.get("quadrature"), gamma=gamma,
                              flux=first.get("flux"), K=cfg.K, level=cfg.level)
    dt = sets[0].dataset.dt
    reference = generate_trajectory(disc, disc.initial(0), disc.problem.t_train, dt,
                                    {"problem": problem_id, "member": 0})
    model = build_stage_model(disc, dt, rho_bounds=None, precision=cfg.train.precision)
    logger.info("Validating on %s (gamma=%.4g, %d snapshots)", problem_id, disc.gamma, reference.n_snapshots)
    return make_validator(model, reference.states, cfg.train.validation_components), problem_id


def _run_train(cfg, config: dict) -> dict:
    import jax

    from dgnet.output import run_directory, save_summary, write_csv, write_manifest
    from dgnet.physics.problems import get_problem
    from dgnet.surrogate import beta_floor, compute_dtype, init_params, load_params, save_params
    from dgnet.training import train_loop

    start = time.perf_counter()
    sets = _training_sets(cfg)
    validate, validation_problem = _validator(cfg, sets)

    ops = sets[0].model.ops
    if cfg.init:
        params = load_params(cfg.init)
    else:
        vol_enabled = cfg.vol_enabled
        if vol_enabled is None:
            vol_enabled = get_problem(sets[0].dataset.metadata.get("problem", cfg.problem)).vol_enabled
        params = init_params(jax.random.PRNGKey(cfg.train.seed), ops.dim, ops.n_p, vol_enabled=vol_enabled,
                             beta=beta_floor(cfg.train.precision), dtype=compute_dtype(cfg.train.precision))

    result = train_loop(cfg.train, sets, params, validate)

    run_dir = run_directory("train", cfg.out)
    save_params(result.best_params, run_dir / "best.npz")
    save_params(result.final_params, run_dir / "final.npz")
    write_csv(
        run_dir / "history.csv",
        ("epoch", "loss", "validation_error", "best_validation_error"),
        [(r.epoch, r.loss, r.validation_error, r.best_validation_error) for r in result.history],
    )
    # wall time is kept out of history.csv so reruns stay byte-identical
    write_csv(run_dir / "timing.csv", ("epoch", "wall_time"), [(r.epoch, r.wall_time) for r in result.history])
    write_manifest(run_dir, "train", config, seeds={"train": cfg.train.seed},
                   wall_time=time.perf_counter() - start)
    summary = {
        "mode": cfg.train.mode,
        "datasets": [s.dataset.name for s in sets],
        "validation_problem": validation_problem,
        "epochs": cfg.train.epochs,
        "delta": cfg.train.delta,
        "window": cfg.train.window,
        "best_error": result.best_error,
        "best_epoch": result.best_epoch,
        "run_dir": str(run_dir),
    }
    save_summary(run_dir, "train", **summary)
    return summary


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


@main.command()
@_config_option
@click.option("--problem", default=None)
@click.option("--checkpoint", default=None, help="Surrogate checkpoint; flux-oracle mode needs none.")
@click.option("--surrogate-mode", default=None, type=click.Choice(["learned", "flux-oracle"]))
@click.option("--T", "T", default=None, type=float)
@click.option("--dt", default=None, type=float)
@click.option("--gamma", default=None, type=float)
@click.option("--N", "N", default=None, type=int)
@click.option("--K", "K", default=None, type=int)
@click.option("--components", default=None, help="Comma-separated components for the errors.")
@click.option("--indicator/--no-indicator", default=None, help="Compute the a-posteriori error indicator.")
@click.option("--gap-iterations", default=None, type=int, help="Power iterations for the Jacobian gap (0 skips).")
@_out_option
def analyze(config_path, problem, checkpoint, surrogate_mode, T, dt, gamma, N, K, components, indicator,
            gap_iterations, out):
    """Compare a surrogate rollout with the DG trajectory: errors, indicator and bound."""
    from dgnet.runconfig import load_run_config, to_dict

    with _exit_on_error():
        cfg = load_run_config("analyze", config_path, dict(
            problem=problem, checkpoint=checkpoint, surrogate_mode=surrogate_mode, T=T, dt=dt, gamma=gamma,
            N=N, K=K, components=components, indicator=indicator, gap_iterations=gap_iterations, out=out,
        ))
        summary = _run_analyze(cfg, to_dict(cfg))

    click.echo(f"Mean relative L2 error {summary['mean_error']:.6g} over {summary['n_steps']} steps")
    if summary["truncated_at"] is not None:
        click.secho(f"  Surrogate rollout blew up at step {summary['truncated_at']}", fg="yellow", err=True)
    click.echo(f"Artifacts: {summary['run_dir']}")


def _first_invalid(states, flux_model) -> int | None:
    import numpy as np

    for i, state in enumerate(states):
        if not bool(np.all(flux_model.is_valid(state))):
            return i
    return None


def _run_analyze(cfg, config: dict) -> dict:
    import jax
    import numpy as np

    from dgnet.analysis import (
        accumulated_error_bound,
        error_indicator,
        jacobian_gap_estimate,
        nonzero_components,
        one_step_amplification,
        relative_l2,
        trajectory_errors,
    )
    from dgnet.errors import CheckpointError, ConfigError
    from dgnet.output import run_directory, save_summary, write_csv, write_manifest
    from dgnet.solver import discretize_problem, rollout
    from dgnet.surrogate import init_params, load_params, surrogate_tangent_fn
    from dgnet.training import build_stage_model, generate_trajectory

    start = time.perf_counter()
    if cfg.checkpoint is None and cfg.surrogate_mode == "learned":
        raise CheckpointError("analyze needs --checkpoint unless --surrogate-mode flux-oracle")
    disc = discretize_problem(cfg.problem, N=cfg.N, mode=cfg.quadrature, gamma=cfg.gamma, mesh_path=cfg.mesh,
                              K=cfg.K, level=cfg.level)
    T = disc.problem.t_test if cfg.T is None else cfg.T
    dt = disc.problem.dt if cfg.dt is None else cfg.dt
    model = build_stage_model(disc, dt, components=cfg.components, rho_bounds=None,
                              surrogate_mode=cfg.surrogate_mode)
    if cfg.checkpoint:
        params = load_params(cfg.checkpoint)
    else:
        params = init_params(jax.random.PRNGKey(cfg.seed), disc.mesh.dim, model.ops.n_p)

    u0 = disc.initial(0)
    reference = generate_trajectory(disc, u0, T, dt, {"problem": cfg.problem, "member": 0}, progress=True)
    tangent = surrogate_tangent_fn(params, model.ops, disc.bcs, disc.flux_model, cfg.surrogate_mode)
    pred, _ = rollout(u0, dt, reference.n_steps, tangent, disc.limiter)
    pred = np.asarray(pred)

    truncated = _first_invalid(pred, disc.flux_model)
    n_kept = len(pred) if truncated is None else max(truncated, 1)
    components = nonzero_components(reference.states[:n_kept], model.mass, model.components)
    if not components:
        raise ConfigError("every selected component has a zero reference norm", path="components")
    if len(components) < len(model.components):
        logger.warning("Relative errors skip components %s: zero reference norm",
                       sorted(set(model.components) - set(components)))
    series = relative_l2(pred[:n_kept], reference.states[:n_kept], model.mass, components)
    times = reference.times
    run_dir = run_directory("analyze", cfg.out)
    write_csv(
        run_dir / "errors.csv",
        ("step", "t", *[f"q{c}" for c in series.components], "mean"),
        [(i, times[i], *row, float(np.mean(row))) for i, row in enumerate(series.errors)],
    )

    indicator_max = bound_final = None
    if cfg.indicator and n_kept > 1:
        ind = error_indicator(pred[:n_kept], params, model)
        n = len(ind.values)
        g = one_step_amplification(pred[: n + 1], reference.states[: n + 1], model)
        e = trajectory_errors(pred[: n + 1], reference.states[: n + 1], model)
        bound = accumulated_error_bound(ind.values, g, e0=float(e[0]))
        write_csv(
            run_dir / "indicator.csv",
            ("step", "t", "f", "g", "error", "bound"),
            [(i + 1, times[i + 1], ind.values[i], g[i], e[i + 1], bound[i + 1]) for i in range(n)],
        )
        indicator_max = float(np.max(ind.values)) if n else 0.0
        bound_final = float(bound[-1])

    gap = None
    if cfg.gap_iterations > 0:
        key = jax.random.PRNGKey(cfg.seed)
        gap = jacobian_gap_estimate(u0, params, model, key, iterations=cfg.gap_iterations)

    write_manifest(run_dir, "analyze", config, seeds={"analyze": cfg.seed}, wall_time=time.perf_counter() - start)
    summary = {
        "problem": cfg.problem,
        "surrogate_mode": cfg.surrogate_mode,
        "n_steps": reference.n_steps,
        "mean_error": float(np.mean(series.errors)),
        "final_error": float(np.mean(series.errors[-1])),
        "truncated_at": truncated,
        "indicator_max": indicator_max,
        "bound_final": bound_final,
        "jacobian_gap": gap,
        "run_dir": str(run_dir),
    }
    save_summary(run_dir, "analyze", **summary)
    return summary


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------


@main.command()
@_config_option
@click.option("--problem", default=None, help="Problem with an analytic solution (vortex).")
@click.option("--orders", default=None, help="Comma-separated polynomial orders, e.g. 1,2,3.")
@click.option("--levels", default=None, help="Comma-separated mesh sizes, e.g. h,h/2,h/4.")
@click.option("--T", "T", default=None, type=float)
@click.option("--dt", default=None, type=float)
@click.option("--quadrature", default=None, type=click.Choice(["collocation", "over-integration"]))
@_out_option
def convergence(config_path, problem, orders, levels, T, dt, quadrature, out):
    """Mesh-refinement study against the exact solution; writes errors and rates."""
    from dgnet.runconfig import load_run_config, to_dict

    with _exit_on_error():
        cfg = load_run_config("convergence", config_path, dict(
            problem=problem, orders=orders, levels=levels, T=T, dt=dt, quadrature=quadrature, out=out,
        ))
        summary = _run_convergence(cfg, to_dict(cfg))

    for row in summary["rates"]:
        click.echo(f"  N={row['N']}: rate {row['rate']:.3f}")
    click.echo(f"Artifacts: {summary['run_dir']}")


def element_size(mesh) -> float:
    """Largest element diameter (longest vertex-to-vertex distance)."""
    import numpy as np

    corners = mesh.vertices[mesh.elements]
    diffs = corners[:, :, None, :] - corners[:, None, :, :]
    return float(np.sqrt((diffs**2).sum(axis=-1)).max())


def _run_convergence(cfg, config: dict) -> dict:
    from dgnet.analysis import convergence_rates, l2_error_exact, pairwise_rates
    from dgnet.errors import ConfigError
    from dgnet.output import run_directory, save_summary, write_csv, write_manifest
    from dgnet.physics.problems import get_problem, vortex_exact
    from dgnet.runconfig import parse_level
    from dgnet.solver import discretize_problem, integrate, steps_for

    start = time.perf_counter()
    problem = get_problem(cfg.problem)
    if problem.kind != "vortex":
        raise ConfigError(f"no analytic solution for {cfg.problem!r}", path="problem")
    levels = [parse_level(level) for level in cfg.levels]
    if len(levels) < 2:
        raise ConfigError("a convergence study needs at least two levels", path="levels")
    n_steps = steps_for(cfg.T, cfg.dt)

    def exact(x, t):
        return vortex_exact(x, t, problem.gamma)

    error_rows, rate_rows = [], []
    for N in cfg.orders:
        errors, sizes = [], []
        for level in levels:
            disc = discretize_problem(cfg.problem, N=N, mode=cfg.quadrature, level=level)
            u = integrate(disc.initial(), cfg.dt, n_steps, "ssp-rk2", disc.tangent, disc.limiter,
                          validate=disc.flux_model.is_valid)
            errors.append(l2_error_exact(u, disc.ops, exact, n_steps * cfg.dt, cfg.component))
            sizes.append(element_size(disc.mesh))
            logger.info("N=%d level=%d K=%d: L2 error %.4e", N, level, disc.ops.K, errors[-1])
            error_rows.append((N, level, disc.ops.K, sizes[-1], errors[-1]))
        pairs = pairwise_rates(errors, sizes)
        rate_rows.append({"N": N, "rate": convergence_rates(errors, sizes), "pairwise": pairs})

    run_dir = run_directory("convergence", cfg.out)
    write_csv(run_dir / "errors.csv", ("N", "level", "K", "h", "error"), error_rows)
    write_csv(
        run_dir / "rates.csv",
        ("N", "rate", *[f"rate_{i}_{i + 1}" for i in range(len(levels) - 1)]),
        [(r["N"], r["rate"], *r["pairwise"]) for r in rate_rows],
    )
    write_manifest(run_dir, "convergence", config, wall_time=time.perf_counter() - start)
    summary = {
        "problem": cfg.problem,
        "T": n_steps * cfg.dt,
        "dt": cfg.dt,
        "quadrature": cfg.quadrature,
        "errors": [{"N": r[0], "level": r[1], "K": r[2], "h": r[3], "error": r[4]} for r in error_rows],
        "rates": rate_rows,
        "run_dir": str(run_dir),
    }
    save_summary(run_dir, "convergence", **summary)
    return summary


# ---------------------------------------------------------------------------
# wave-speed
# ---------------------------------------------------------------------------


@main.command("wave-speed")
@_config_option
@click.option("--checkpoint", default=None, help="Surrogate whose flux network is profiled.")
@click.option("--oracle", default=None, type=click.Choice(["central", "linear-advection"]),
              help="Profile an exact flux instead of a checkpoint.")
@click.option("--speed", default=None, help="Comma-separated advection velocity for the oracle.")
@click.option("--d", "d", default=None, type=int, help="Spatial dimension (oracle only).")
@click.option("--resolution", default=None, type=int)
@_out_option
def wave_speed(config_path, checkpoint, oracle, speed, d, resolution, out):
    """Normalized linearized wave speed of a flux network on the input hypercube faces."""
    from dgnet.runconfig import load_run_config, to_dict

    with _exit_on_error():
        cfg = load_run_config("wave-speed", config_path, dict(
            checkpoint=checkpoint, oracle=oracle, speed=speed, d=d, resolution=resolution, out=out,
        ))
        summary = _run_wave_speed(cfg, to_dict(cfg))

    for plane in summary["planes"]:
        click.echo(f"  {plane['name']}: mean {plane['mean']:.6g}")
    click.echo(f"Artifacts: {summary['run_dir']}")


def _run_wave_speed(cfg, config: dict) -> dict:
    import numpy as np

    from dgnet.analysis import wave_speed_profile
    from dgnet.output import run_directory, save_summary, write_grid_csv, write_manifest
    from dgnet.surrogate import load_params, oracle_flux_network

    start = time.perf_counter()
    if cfg.checkpoint:
        params = load_params(cfg.checkpoint)
        network, d = params, params.spec.d
    else:
        network = oracle_flux_network(cfg.oracle, tuple(cfg.speed))
        d = cfg.d if cfg.d is not None else len(cfg.speed)
    planes = wave_speed_profile(network, d, resolution=cfg.resolution, threshold=cfg.threshold)

    run_dir = run_directory("wave-speed", cfg.out)
    rows = []
    for plane in planes:
        write_grid_csv(run_dir / f"{plane.name}.csv", plane.values)
        kept = plane.values[~plane.mask]
        rows.append({
            "name": plane.name,
            "mean": float(np.mean(kept)) if kept.size else math.nan,
            "min": float(np.min(kept)) if kept.size else math.nan,
            "max": float(np.max(kept)) if kept.size else math.nan,
            "masked": int(plane.mask.sum()),
        })
    write_manifest(run_dir, "wave-speed", config, wall_time=time.perf_counter() - start)
    summary = {
        "source": cfg.checkpoint or f"oracle:{cfg.oracle}",
        "d": d,
        "resolution": cfg.resolution,
        "planes": rows,
        "run_dir": str(run_dir),
    }
    save_summary(run_dir, "wave-speed", **summary)
    return summary


# ---------------------------------------------------------------------------
# histogram
# ---------------------------------------------------------------------------


@main.command()
@_config_option
@click.option("--problem", default=None)
@click.option("--data", default=None, help="Dataset directory (default: generate one).")
@click.option("--delta", default=None, type=float, help="Randomization level (0 for clean data).")
@click.option("--epochs", default=None, type=int, help="Randomized passes over the snapshots.")
@click.option("--resolution", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--N", "N", default=None, type=int)
@click.option("--K", "K", default=None, type=int)
@click.option("--T", "T", default=None, type=float, help="Horizon of the generated trajectory.")
@click.option("--dt", default=None, type=float)
@_out_option
def histogram(config_path, problem, data, delta, epochs, resolution, seed, N, K, T, dt, out):
    """Density of normalized face triples, clean or randomized."""
    from dgnet.runconfig import load_run_config, to_dict

    with _exit_on_error():
        cfg = load_run_config("histogram", config_path, dict(
            problem=problem, data=data, delta=delta, epochs=epochs, resolution=resolution, seed=seed, N=N, K=K,
            T=T, dt=dt, out=out,
        ))
        summary = _run_histogram(cfg, to_dict(cfg))

    click.echo(f"{summary['samples']} samples, {summary['occupied']} occupied cells")
    click.echo(f"Artifacts: {summary['run_dir']}")


def _run_histogram(cfg, config: dict) -> dict:
    import jax

    from dgnet.analysis import face_triples, input_density_histogram
    from dgnet.output import run_directory, save_summary, write_csv, write_grid_csv, write_manifest
    from dgnet.settings import get_settings
    from dgnet.solver import discretize_problem
    from dgnet.surrogate import beta_floor
    from dgnet.training import generate_trajectory, load_dataset

    start = time.perf_counter()
    if cfg.data:
        dataset = load_dataset(Path(cfg.data))
        meta = dataset.metadata
        disc = discretize_problem(meta["problem"], N=meta.get("N"), mode="collocation", gamma=meta.get("gamma"),
                                  flux=meta.get("flux"), K=meta.get("K"))
    else:
        disc = discretize_problem(cfg.problem, N=cfg.N, mode="collocation", K=cfg.K)
        T = disc.problem.t_train if cfg.T is None else cfg.T
        dt = disc.problem.dt if cfg.dt is None else cfg.dt
        dataset = generate_trajectory(disc, disc.initial(0), T, dt, {"problem": cfg.problem, "member": 0},
                                      progress=True)

    triples = face_triples(dataset.states, disc.ops, disc.bcs, disc.flux_model, dataset.times,
                           beta=beta_floor(get_settings().precision), delta=cfg.delta,
                           key=jax.random.PRNGKey(cfg.seed), epochs=cfg.epochs, progress=True)
    hist = input_density_histogram(triples, resolution=cfg.resolution)

    run_dir = run_directory("histogram", cfg.out)
    rows = []
    for k, (counts, density) in enumerate(zip(hist.counts, hist.density)):
        write_grid_csv(run_dir / f"density{k}.csv", density)
        rows.append((k, int(counts.sum()), int((counts > 0).sum())))
    write_csv(run_dir / "sets.csv", ("set", "samples", "occupied"), rows)
    write_manifest(run_dir, "histogram", config, seeds={"noise": cfg.seed}, wall_time=time.perf_counter() - start)
    summary = {
        "source": cfg.data or cfg.problem,
        "delta": cfg.delta,
        "epochs": cfg.epochs if cfg.delta > 0 else 1,
        "samples": hist.total,
        "occupied": hist.n_occupied,
        "sets": [{"set": r[0], "samples": r[1], "occupied": r[2]} for r in rows],
        "run_dir": str(run_dir),
    }
    save_summary(run_dir, "histogram", **summary)
    return summary


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


@main.group()
def config():
    """Configuration management."""
    pass


@config.command("show")
def config_show():
    """Show current configuration."""
    from dgnet.settings import get_settings

    settings = get_settings()
    click.echo(f"Data dir: {settings.data_dir}")
    click.echo(f"Precision: {settings.precision}")
    click.echo(f"Debug checks: {'on' if settings.debug else 'off'}")
    click.echo(f"Threads: {settings.threads or 'default'}")
    s = settings.solver
    click.echo(f"Solver: N={s.order}, flux={s.flux}, quadrature={s.quadrature}, limiter eps={s.limiter_eps:g}")
    click.echo(f"Newton: tol={settings.newton_tol:g}, max iterations={settings.implicit.max_newton}, "
               f"jvp={settings.implicit.jvp}")
    click.echo(f"GMRES: rtol={settings.gmres_rtol:g}, restart={settings.implicit.restart}")
    t = settings.training
    click.echo(f"Training: mode={t.mode}, delta={t.delta:g}, window={t.window}, lr={t.learning_rate:g}, "
               f"epochs={t.epochs}, cadence={t.cadence}")
    click.echo(f"Max resamples: {settings.retry.max_resamples}")


@config.command("validate")
@click.argument("file", type=click.Path(path_type=Path))
@click.option("--command", "command", default=None,
              type=click.Choice(["solve", "generate-data", "train", "analyze", "convergence", "wave-speed",
                                 "histogram"]),
              help="Command the file is for (default: the file's 'command' key or its name).")
def config_validate(file, command):
    """Validate a run config file against its command's schema."""
    from dgnet.errors import ConfigError
    from dgnet.runconfig import SCHEMAS, build, read_config_file

    try:
        raw = read_config_file(file)
        command = command or raw.pop("command", None) or file.stem
        raw.pop("command", None)
        if command not in SCHEMAS:
            raise ConfigError(f"cannot tell which command {file} is for; pass --command")
        build(SCHEMAS[command], raw)
    except ConfigError as e:
        click.secho(f"Invalid: {e}", fg="red", err=True)
        sys.exit(2)
    click.secho(f"{file}: valid {command} config", fg="green")
