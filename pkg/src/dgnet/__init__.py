"""dgnet: differentiable DG Euler solver and DGNet surrogate training."""

import jax

# Solver tolerances assume double precision; single precision is an explicit dtype choice.
jax.config.update("jax_enable_x64", True)

__version__ = "0.1.0"
