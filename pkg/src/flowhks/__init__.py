"""Heat kernel signatures for pathlines of unsteady 2D flows.

Pipeline: integrate or load pathlines, build the neighborhood graph with
Voronoi cell volumes, assemble and eigendecompose the discrete
Laplace-Beltrami operator, and sample multi-scale signatures; analysis and a
JSON query service sit on top.
"""

from .analysis import (
    ClusterResult,
    ScaleRange,
    align_scales,
    canonicalize_labels,
    kmeans_hks,
    kmeans_positions,
    mean_hks,
    similarity_field,
)
from .flowfield import (
    ABCParams,
    IntegrationError,
    PathlineFormatError,
    PathlineSet,
    abc_velocity,
    eval_abc,
    integrate_pathlines,
    load_pathlines,
    seed_grid,
    write_pathlines,
)
from .hks import HKSField, build_field, compute_hks, load_hks, normalize_hks, sample_scales, scale_range, write_hks
from .lbo import EigensolverError, LBOConfig, SpectralDecomposition, assemble, eigendecompose, symmetrize
from .neighborhood import (
    NeighborhoodGraph,
    build_graph,
    estimate_local_dimension,
    knn,
    local_pca,
    project_to_tangent,
    voronoi_volume,
)
from .pipeline import PipelineConfig, PipelineResult, PipelineStageError, run_pipeline
from .service import DatasetRecord, create_app, load_dataset, serve

__version__ = "0.1.0"
