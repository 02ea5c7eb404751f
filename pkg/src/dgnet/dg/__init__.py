from dgnet.dg.basis import MAX_ORDER, NodalBasis, build_basis
from dgnet.dg.operators import QUADRATURE_MODES, DGOperators, build_element_operators
from dgnet.dg.tangent import dg_tangent, element_means, face_states, l2_norm_squared

__all__ = [
    "MAX_ORDER",
    "QUADRATURE_MODES",
    "DGOperators",
    "NodalBasis",
    "build_basis",
    "build_element_operators",
    "dg_tangent",
    "element_means",
    "face_states",
    "l2_norm_squared",
]
