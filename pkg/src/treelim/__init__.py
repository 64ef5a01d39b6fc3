"""Random binary trees: exact combinatorics, samplers, trimming/skeleton
algebra, excursion-coded real trees, limit densities, and the Monte-Carlo
experiment harness that checks the scaling-limit predictions at desk scale.
"""

from .enumeration import (
    Constants,
    CountTable,
    Family,
    WeightKind,
    WeightTable,
    catalan_count,
    compute_c,
    default_constants,
    solve_rho,
    we_count,
    weight_table,
)
from .plane import (
    ContourPath,
    PlaneTree,
    Skeleton,
    TwoForest,
    classify,
    contour,
    contract,
    decode_contour,
    decompose_plane,
    leaf,
    node,
    parse_tree,
    reconstruct_plane,
    rescaled_skeleton,
    sample_plane_uniform,
    skeleton_plane,
    trim,
)
from .unordered import (
    GoodSkeleton,
    UnorderedTree,
    canonicalize,
    decompose_unordered,
    enumerate_unordered,
    equivalent,
    exact_mean_height,
    is_a_good,
    reconstruct_unordered,
    sample_unordered_uniform,
    skeleton_unordered,
)

__version__ = "0.1.0"
