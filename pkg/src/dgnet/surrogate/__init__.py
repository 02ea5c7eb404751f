from dgnet.surrogate.dgnet import (
    dgnet_tangent,
    face_flux_mismatch,
    face_inputs,
    oracle_flux_network,
    surrogate_tangent_fn,
)
from dgnet.surrogate.network import (
    SurrogateParams,
    SurrogateSpec,
    init_params,
    load_params,
    mlp_forward,
    save_params,
)
from dgnet.surrogate.normalize import (
    NormalizedFaceTriple,
    NormalizedVolumeFlux,
    beta_floor,
    compute_dtype,
    normalize_face_triple,
    normalize_volume_flux,
)

__all__ = [
    "NormalizedFaceTriple",
    "NormalizedVolumeFlux",
    "SurrogateParams",
    "SurrogateSpec",
    "beta_floor",
    "compute_dtype",
    "dgnet_tangent",
    "face_flux_mismatch",
    "face_inputs",
    "init_params",
    "load_params",
    "mlp_forward",
    "normalize_face_triple",
    "normalize_volume_flux",
    "oracle_flux_network",
    "save_params",
    "surrogate_tangent_fn",
]
