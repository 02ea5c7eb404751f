from dgnet.physics.boundary import BOUNDARY_KINDS, BoundaryCondition, BoundaryConfig, boundary_ghost_state
from dgnet.physics.euler import (
    conservative_to_primitive,
    euler_flux,
    is_physical,
    max_wave_speed,
    pressure,
    primitive_to_conservative,
    sound_speed,
)
from dgnet.physics.fluxes import SCHEMES, FluxModel, numerical_flux
from dgnet.physics.problems import Problem, get_problem, initial_state, vortex_exact

__all__ = [
    "BOUNDARY_KINDS",
    "SCHEMES",
    "BoundaryCondition",
    "BoundaryConfig",
    "FluxModel",
    "Problem",
    "boundary_ghost_state",
    "conservative_to_primitive",
    "euler_flux",
    "get_problem",
    "initial_state",
    "is_physical",
    "max_wave_speed",
    "numerical_flux",
    "pressure",
    "primitive_to_conservative",
    "sound_speed",
    "vortex_exact",
]
