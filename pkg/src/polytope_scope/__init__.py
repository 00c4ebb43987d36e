"""Exact linear-region decompositions of 2D ReLU networks and their topological signatures."""

from .dualgraph import build_dual_graph, fiedler, score_partition, vertex_weights_from_data
from .homology import averaged_curves, heat_map, persistence, random_filtration
from .network import ArchitectureSpec, ReluNetwork, forward, init_network, input_jacobian
from .polydecomp import BoundingBox2D, CellComplex2D, decompose, locate

__all__ = [
    "ArchitectureSpec", "BoundingBox2D", "CellComplex2D", "ReluNetwork", "averaged_curves",
    "build_dual_graph", "decompose", "fiedler", "forward", "heat_map", "init_network", "input_jacobian",
    "locate", "persistence", "random_filtration", "score_partition", "vertex_weights_from_data",
]
