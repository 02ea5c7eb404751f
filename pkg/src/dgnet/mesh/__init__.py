from dgnet.mesh.connectivity import Connectivity, InteriorFace, build_connectivity, dual_graph
from dgnet.mesh.geometry import ElementGeometry, geometric_factors
from dgnet.mesh.parse import Mesh, load_mesh, parse_mesh, rectangle, uniform_1d

__all__ = [
    "Connectivity",
    "ElementGeometry",
    "InteriorFace",
    "Mesh",
    "build_connectivity",
    "dual_graph",
    "geometric_factors",
    "load_mesh",
    "parse_mesh",
    "rectangle",
    "uniform_1d",
]
