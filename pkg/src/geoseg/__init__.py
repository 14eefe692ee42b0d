"""Interactive selective image segmentation.

Edge-weighted geodesic marker distances (fast-marching Eikonal solver),
a convex relaxed two-phase energy with an exact penalty term, and a
damped semi-implicit AOS minimizer, exposed as a library, CLI, HTTP
service and browser annotator.
"""

from .distance import (
    DistanceBundle,
    DistanceConfig,
    MarkerSet,
    anti_marker_distance,
    build_distance_bundle,
    build_edge_cost,
    combined_distance,
    euclidean_distance,
    marker_distance,
    solve_eikonal,
)
from .evaluation import (
    NoiseRow,
    SweepRow,
    SweepSpec,
    generate_synthetic,
    noise_study,
    parameter_sweep,
    tanimoto,
)
from .grid import (
    GridIndex,
    ScalarGrid,
    edge_detector,
    gaussian_convolve,
    gradient_magnitude_sq,
    normalize,
)
from .kernels import BACKEND
from .smoothing import SmootherParams, gauss_seidel_smooth
from .solver import (
    DegenerateRegionError,
    SegmentationResult,
    SolverMode,
    SolverParams,
    aos_step,
    diffusivity_half_points,
    energy,
    fitting_residual,
    penalty_jump_coefficient,
    penalty_nu,
    penalty_nu_prime,
    penalty_nu_second,
    region_means,
    segment,
    threshold,
    thomas_solve,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DegenerateRegionError",
    "DistanceBundle",
    "DistanceConfig",
    "GridIndex",
    "MarkerSet",
    "NoiseRow",
    "ScalarGrid",
    "SegmentationResult",
    "SmootherParams",
    "SolverMode",
    "SolverParams",
    "SweepRow",
    "SweepSpec",
    "anti_marker_distance",
    "aos_step",
    "build_distance_bundle",
    "build_edge_cost",
    "combined_distance",
    "diffusivity_half_points",
    "edge_detector",
    "energy",
    "euclidean_distance",
    "fitting_residual",
    "gaussian_convolve",
    "gauss_seidel_smooth",
    "generate_synthetic",
    "gradient_magnitude_sq",
    "marker_distance",
    "noise_study",
    "normalize",
    "parameter_sweep",
    "penalty_jump_coefficient",
    "penalty_nu",
    "penalty_nu_prime",
    "penalty_nu_second",
    "region_means",
    "segment",
    "solve_eikonal",
    "tanimoto",
    "threshold",
    "thomas_solve",
    "__version__",
]
