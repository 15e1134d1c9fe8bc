"""Graph random features on discretized manifolds.

Random-walk signature vectors estimate power-series graph kernels
(diffusion/heat kernels in particular). A small MLP surrogate turns the
discrete signatures into a continuous feature field, which yields
low-rank kernel approximations for field interpolation on meshes.
"""

__version__ = "0.1.0"

from manifoldrf import errors
from manifoldrf.graphs import (
    WeightedGraph,
    build_grid_graph,
    build_knn_graph,
    geodesic_distances,
    rescaled_random_walk_laplacian,
    symmetric_normalized_affinity,
)
from manifoldrf.grf import (
    SignatureSet,
    WalkConfig,
    deconvolve_alpha,
    estimate_kernel,
    exact_kernel_series,
    heat_alpha,
    heat_modulation,
    run_grf,
    self_convolve,
)

__all__ = [
    "errors",
    "WeightedGraph",
    "build_grid_graph",
    "build_knn_graph",
    "geodesic_distances",
    "rescaled_random_walk_laplacian",
    "symmetric_normalized_affinity",
    "SignatureSet",
    "WalkConfig",
    "deconvolve_alpha",
    "estimate_kernel",
    "exact_kernel_series",
    "heat_alpha",
    "heat_modulation",
    "run_grf",
    "self_convolve",
]
