"""No-collision transport distances, exact and linearized OT, and embeddings."""

from .embedding import (
    Embedding,
    check_distance_matrix,
    classical_mds,
    frobenius_relative_error,
    isomap,
    pairwise_euclidean,
    procrustes_align,
    rescale_to_reference,
    smacof_mds,
    svd_embed,
)
from .experiments import ExperimentReport, ExperimentSpec, mnist_pipeline, run_experiment, timing_sweep
from .measures import (
    Frame,
    GridDensity,
    PointCloud,
    ShapeSpec,
    TransformSpec,
    apply_transform,
    load_mnist_idx,
    padded_frame,
    rasterize,
    to_pointcloud,
)
from .slicing import (
    CellPartition,
    FeatureSet,
    PartitionError,
    SlicingSchedule,
    features,
    nc_distance,
    nc_distance_matrix,
    nc_features,
    partition,
)
from .transport import (
    LotEmbedding,
    RotationOracleParams,
    TransportPlan,
    analytic_lot_rotation,
    analytic_w2_dilation,
    analytic_w2_rotation,
    analytic_w2_translation,
    exact_w2,
    lot_distance_matrix,
    lot_embed,
    rhombus_witness,
    second_moments,
)

__version__ = "0.1.0"

__all__ = [
    "CellPartition",
    "Embedding",
    "ExperimentReport",
    "ExperimentSpec",
    "FeatureSet",
    "Frame",
    "GridDensity",
    "LotEmbedding",
    "PartitionError",
    "PointCloud",
    "RotationOracleParams",
    "ShapeSpec",
    "SlicingSchedule",
    "TransformSpec",
    "TransportPlan",
    "analytic_lot_rotation",
    "analytic_w2_dilation",
    "analytic_w2_rotation",
    "analytic_w2_translation",
    "apply_transform",
    "check_distance_matrix",
    "classical_mds",
    "exact_w2",
    "features",
    "frobenius_relative_error",
    "isomap",
    "load_mnist_idx",
    "lot_distance_matrix",
    "lot_embed",
    "mnist_pipeline",
    "nc_distance",
    "nc_distance_matrix",
    "nc_features",
    "padded_frame",
    "pairwise_euclidean",
    "partition",
    "procrustes_align",
    "rasterize",
    "rescale_to_reference",
    "rhombus_witness",
    "run_experiment",
    "second_moments",
    "smacof_mds",
    "svd_embed",
    "timing_sweep",
    "to_pointcloud",
]
