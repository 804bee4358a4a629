"""Low-dimensional skeletons of high-dimensional point sets by grid/ball density scanning.

Fix a grid step ``r``, count the data points in the ball of radius ``r``
around each relevant grid node, keep the nodes whose count exceeds a
threshold ``nu``, and join them into polylines, triangle strips or
s-simplex strips. Least-squares and PCA line fits are provided for
comparison.
"""
from .baselines import (
    PrincipalFrame,
    RegressionLine,
    fit_pca,
    fit_regression_line,
    pca_objective,
    power_eigh,
)
from .geometry import Dataset, bounding_box, distance
from .gridscan import (
    DensityTable,
    GridIndex,
    build_grid_index,
    candidate_centers,
    count_ball,
    coverage_report,
    density_table,
    threshold_K,
)
from .skeleton import (
    Skeleton,
    chain_by_rank,
    chain_greedy,
    simplex_strip,
    triangle_strip,
    vertex_coverage,
    vertex_to_truth_distance,
)
from .synth import SynthSpec, generate
from .tuning import TuneBounds, TuneResult, adapt_radius, adapt_threshold

__version__ = "0.1.0"

from .estimators import LeastSquaresLine, PowerPCA, SkeletonScan  # noqa: E402

__all__ = [
    "Dataset",
    "DensityTable",
    "GridIndex",
    "LeastSquaresLine",
    "PowerPCA",
    "PrincipalFrame",
    "RegressionLine",
    "Skeleton",
    "SkeletonScan",
    "SynthSpec",
    "TuneBounds",
    "TuneResult",
    "adapt_radius",
    "adapt_threshold",
    "bounding_box",
    "build_grid_index",
    "candidate_centers",
    "chain_by_rank",
    "chain_greedy",
    "count_ball",
    "coverage_report",
    "density_table",
    "distance",
    "fit_pca",
    "fit_regression_line",
    "generate",
    "pca_objective",
    "power_eigh",
    "simplex_strip",
    "threshold_K",
    "triangle_strip",
    "vertex_coverage",
    "vertex_to_truth_distance",
]
