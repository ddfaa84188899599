"""Linear spherical sliced optimal transport embeddings and gradient flows."""

from .circle import (
    CircularDisplacement,
    CircularMeasure,
    cdf,
    circ_abs,
    cot_shift_cost,
    from_points,
    lcot_distance,
    lcot_embed,
    mean_angle,
    optimal_shift,
    quantile,
    uniform_grid,
)
from .embedding import (
    DistanceMatrix,
    LssotEmbedding,
    distance,
    embed,
    pairwise,
    pairwise_from_embeddings,
    ssw_reference,
)
from .errors import *  # noqa: F401,F403
from .flow import FlowConfig, FlowTrajectory, exp_map, lssot_grad, run_flow, tangent_project
from .slicer import (
    ProjectedSlice,
    SliceSet,
    SphericalPointCloud,
    make_cloud,
    project,
    sample_slices,
    slices_from_frames,
)
from .sphere_stats import VmfParams, classical_mds, fibonacci_sphere, vmf_sample

__version__ = "0.1.0"
