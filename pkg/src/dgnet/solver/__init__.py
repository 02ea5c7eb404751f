from dgnet.solver.limiter import LimiterConfig, apply_limiter, build_limiter, limiter_factor
from dgnet.solver.setup import Discretization, discretize, discretize_problem
from dgnet.solver.timestep import (
    SCHEMES,
    ImplicitConfig,
    NewtonResult,
    StepRecord,
    backward_euler_step,
    integrate,
    rollout,
    ssp_rk2_step,
    steps_for,
)

__all__ = [
    "SCHEMES",
    "Discretization",
    "ImplicitConfig",
    "LimiterConfig",
    "NewtonResult",
    "StepRecord",
    "apply_limiter",
    "backward_euler_step",
    "build_limiter",
    "discretize",
    "discretize_problem",
    "integrate",
    "limiter_factor",
    "rollout",
    "steps_for",
]
