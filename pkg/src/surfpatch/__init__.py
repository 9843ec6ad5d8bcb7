"""Bottom-up vertex -> patch -> surface analysis of triangle-mesh stream surfaces.

Surfaces are simplified, described per-vertex by multiscale heat-kernel
signatures, segmented into connected patches by constrained hierarchical
clustering, and matched within and across surfaces through aggregated
patch features.
"""

from surfpatch.mesh import Mesh, AdjacencyGraph, load_obj, save_obj

__version__ = "0.1.0"

__all__ = ["Mesh", "AdjacencyGraph", "load_obj", "save_obj", "__version__"]
