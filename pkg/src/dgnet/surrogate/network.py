"""Single-hidden-layer tanh MLPs, parameter initialization and checkpoints."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import jax
import jax.numpy as jnp
import numpy as np

from dgnet.errors import CheckpointError
from dgnet.surrogate.normalize import BETA_DOUBLE

logger = logging.getLogger(__name__)

CHECKPOINT_SCHEMA = "dgnet-params/1"
LAYER_KEYS = ("W1", "b1", "W2", "b2")


@dataclass(frozen=True)
class SurrogateSpec:
    """Static shape information of a surrogate."""

    d: int
    n_p: int
    vol_enabled: bool = False
    beta: float = BETA_DOUBLE
    hidden: int = 128

    def layer_shapes(self) -> dict[str, dict[str, tuple[int, ...]]]:
        h = self.hidden
        shapes = {"flux": _mlp_shapes(self.d + 1, h, 1)}
        if self.vol_enabled:
            shapes["vol"] = _mlp_shapes(self.n_p, h, self.n_p)
        return shapes


def _mlp_shapes(n_in: int, hidden: int, n_out: int) -> dict[str, tuple[int, ...]]:
    return {"W1": (hidden, n_in), "b1": (hidden,), "W2": (n_out, hidden), "b2": (n_out,)}


@dataclass(frozen=True, eq=False)
class SurrogateParams:
    """Ψ_flux (and optional Ψ_vol) weights plus their static spec.

    ``weights`` is a pytree ``{"flux": {W1, b1, W2, b2}, "vol": {...}}``; the
    trainer differentiates and updates it, the spec never changes.
    """

    spec: SurrogateSpec
    weights: dict

    def with_weights(self, weights: dict) -> SurrogateParams:
        return replace(self, weights=weights)

    def astype(self, dtype) -> SurrogateParams:
        """Same parameters with every weight cast to dtype; self when nothing changes."""
        if all(jnp.asarray(w).dtype == jnp.dtype(dtype) for w in jax.tree_util.tree_leaves(self.weights)):
            return self
        return self.with_weights(jax.tree_util.tree_map(lambda w: jnp.asarray(w, dtype=dtype), self.weights))

    @property
    def flux(self) -> dict:
        return self.weights["flux"]

    @property
    def vol(self) -> dict | None:
        return self.weights.get("vol")

    def is_finite(self) -> bool:
        return all(bool(jnp.all(jnp.isfinite(leaf))) for leaf in jax.tree_util.tree_leaves(self.weights))


def mlp_forward(layer: dict, x):
    """W2·tanh(W1·x + b1) + b2 applied along the last axis of x.

    Raises:
        ValueError: the last axis of x does not match W1.
    """
    if x.shape[-1] != layer["W1"].shape[1]:
        raise ValueError(f"input width {x.shape[-1]} does not match layer width {layer['W1'].shape[1]}")
    hidden = jnp.tanh(x @ layer["W1"].T + layer["b1"])
    return hidden @ layer["W2"].T + layer["b2"]


def init_params(
    key,
    d: int,
    n_p: int,
    vol_enabled: bool = False,
    hidden: int | None = None,
    std: float | None = None,
    beta: float = BETA_DOUBLE,
    dtype=jnp.float64,
) -> SurrogateParams:
    """Weights drawn from N(0, std²), biases zero, all of the given dtype."""
    from dgnet.settings import get_settings
    defaults = get_settings().training
    hidden = defaults.hidden if hidden is None else hidden
    std = defaults.init_std if std is None else std

    spec = SurrogateSpec(d=d, n_p=n_p, vol_enabled=vol_enabled, beta=beta, hidden=hidden)
    weights = {}
    for block, shapes in spec.layer_shapes().items():
        key, k1, k2 = jax.random.split(key, 3)
        weights[block] = {
            "W1": std * jax.random.normal(k1, shapes["W1"], dtype=dtype),
            "b1": jnp.zeros(shapes["b1"], dtype=dtype),
            "W2": std * jax.random.normal(k2, shapes["W2"], dtype=dtype),
            "b2": jnp.zeros(shapes["b2"], dtype=dtype),
        }
    return SurrogateParams(spec=spec, weights=weights)


def save_params(params: SurrogateParams, path: Path) -> Path:
    """Write a checkpoint: float64 arrays plus a JSON header, in one .npz archive."""
    path = Path(path)
    spec = params.spec
    header = {
        "schema": CHECKPOINT_SCHEMA,
        "d": spec.d,
        "Np": spec.n_p,
        "vol_enabled": spec.vol_enabled,
        "beta": spec.beta,
        "hidden": spec.hidden,
        "shapes": {b: {k: list(s) for k, s in shapes.items()} for b, shapes in spec.layer_shapes().items()},
    }
    arrays = {
        f"{block}/{k}": np.asarray(layer[k], dtype=np.float64)
        for block, layer in params.weights.items()
        for k in LAYER_KEYS
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        np.savez(f, header=np.array(json.dumps(header, sort_keys=True)), **arrays)
    logger.debug("Saved checkpoint %s", path)
    return path


def load_params(path: Path) -> SurrogateParams:
    """Read a checkpoint written by save_params.

    Raises:
        CheckpointError: missing file, wrong schema or inconsistent shapes.
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            arrays = {name: np.array(data[name]) for name in data.files if name != "header"}
    except (OSError, ValueError, KeyError) as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc

    if header.get("schema") != CHECKPOINT_SCHEMA:
        raise CheckpointError(f"unsupported checkpoint schema {header.get('schema')!r}")
    spec = SurrogateSpec(
        d=int(header["d"]),
        n_p=int(header["Np"]),
        vol_enabled=bool(header["vol_enabled"]),
        beta=float(header["beta"]),
        hidden=int(header["hidden"]),
    )
    weights = {}
    for block, shapes in spec.layer_shapes().items():
        weights[block] = {}
        for k, shape in shapes.items():
            name = f"{block}/{k}"
            if name not in arrays:
                raise CheckpointError(f"checkpoint is missing {name}")
            if arrays[name].shape != shape:
                raise CheckpointError(f"{name} has shape {arrays[name].shape}, expected {shape}")
            weights[block][k] = jnp.asarray(arrays[name], dtype=jnp.float64)
    return SurrogateParams(spec=spec, weights=weights)
