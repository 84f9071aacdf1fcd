from .ot import (
    OtParams,
    PairError,
    PatternError,
    SinkhornConvergenceError,
    TransportPlan,
    WeightedPointPattern,
    direct_author_angular_distance,
    make_point_pattern,
    pairwise_author_distances,
    pairwise_direct_distances,
    sinkhorn,
    wasserstein,
)
from .simplex import SimplexError, solve_transport

__all__ = [
    "OtParams", "PairError", "PatternError", "SimplexError", "SinkhornConvergenceError",
    "TransportPlan", "WeightedPointPattern", "direct_author_angular_distance",
    "make_point_pattern", "pairwise_author_distances", "pairwise_direct_distances",
    "sinkhorn", "solve_transport", "wasserstein",
]
