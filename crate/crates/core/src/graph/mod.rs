//! Facial-attribute graph construction.
//!
//! Landmark features are L2-normalised, compared with a clamped cosine
//! kernel and divided by `exp` of the landmark distance. The resulting
//! weights are cut at `mean + tau * std_dev` of the off-diagonal entries to
//! give a binary adjacency.

mod construct;
mod types;

pub use construct::{
    binarize, build_graph, l2_normalize_rows, population_stats, raw_adjacency, similarity_kernel,
    threshold_stats, ZERO_ROW_NORM,
};
pub use types::{
    BinaryAdjacency, FeatureMatrix, GraphSample, LandmarkSet, Point, ThresholdParams,
    WeightedAdjacency,
};

/// Threshold grid swept in the ablation protocol.
pub const DEFAULT_TAU_GRID: [f64; 9] = [0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.70, 0.90];
