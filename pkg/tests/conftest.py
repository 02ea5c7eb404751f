"""Shared test fixtures."""

from __future__ import annotations

from pathlib import Path

import jax
import jax.numpy as jnp
import pytest

from dgnet.mesh import rectangle, uniform_1d
from dgnet.physics.boundary import BoundaryCondition, BoundaryConfig
from dgnet.physics.euler import primitive_to_conservative
from dgnet.physics.fluxes import FluxModel
from dgnet.physics.problems import reset_catalog_cache
from dgnet.physics.reference import reset_reference_cache
from dgnet.settings import reset_settings
from dgnet.solver import discretize, discretize_problem

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(autouse=True)
def _clean_caches():
    """Reset singletons and YAML caches before and after each test."""
    reset_settings()
    reset_catalog_cache()
    reset_reference_cache()
    yield
    reset_settings()
    reset_catalog_cache()
    reset_reference_cache()


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def _periodic(*pairs):
    conditions = {}
    for a, b in pairs:
        conditions[a] = BoundaryCondition(kind="periodic-pair", partner=b)
        conditions[b] = BoundaryCondition(kind="periodic-pair", partner=a)
    return BoundaryConfig(conditions=conditions)


@pytest.fixture
def periodic_bcs_1d():
    return _periodic(("left", "right"))


@pytest.fixture
def periodic_bcs_2d():
    return _periodic(("left", "right"), ("bottom", "top"))


@pytest.fixture
def periodic_1d(periodic_bcs_1d):
    """8 elements of order 2 on the periodic unit interval, LF Euler flux."""
    return discretize(uniform_1d(0.0, 1.0, 8), 2, FluxModel(), periodic_bcs_1d)


@pytest.fixture
def periodic_2d(periodic_bcs_2d):
    """18 triangles of order 2 on the periodic unit square, LF Euler flux."""
    return discretize(rectangle(0.0, 1.0, 0.0, 1.0, 3, 3), 2, FluxModel(), periodic_bcs_2d)


@pytest.fixture
def sod_small():
    """K=10, N=1 Sod tube in collocation mode with the limiter."""
    return discretize_problem("sod", N=1, K=10, mode="collocation")


@pytest.fixture
def random_state():
    """Factory of random physical Euler states: (key, K, Np, dim) -> (K, Np, dim + 2)."""

    def make(key, K, Np, dim):
        k1, k2, k3 = jax.random.split(key, 3)
        rho = jax.random.uniform(k1, (K, Np, 1), minval=0.5, maxval=1.5)
        vel = jax.random.uniform(k2, (K, Np, dim), minval=-0.5, maxval=0.5)
        p = jax.random.uniform(k3, (K, Np, 1), minval=0.5, maxval=1.5)
        return primitive_to_conservative(jnp.concatenate([rho, vel, p], axis=-1), 1.4)

    return make
