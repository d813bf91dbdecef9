//! Nearest-neighbor matrix and tensor completion under latent variable
//! models, with synthetic data generation, error metrics and closed-form
//! error bounds.
//!
//! Rows and columns are 0-based in memory and 1-based in every file format.

pub mod error;
pub mod estimator;
pub mod evalbound;
pub mod obsdata;
pub mod simstats;
pub mod synthgen;
pub mod tensorize;

pub use error::{Error, Result};
pub use estimator::{
    basic_estimate, complete_matrix, gaussian_weight, knn_estimate, weighted_estimate, EstimateMatrix,
    EstimatorConfig, Fallback, Provenance, Target, Variant,
};
pub use evalbound::{
    matrix_mse_bound, matrix_tail_bound, mse, rmse, rse, tensor_mse_bound, BoundParams, BoundReport, Scope,
    TensorBoundParams, TensorBoundReport,
};
pub use obsdata::{DenseMatrix, MatrixFormat, ObservationMatrix, ObservationTensor};
pub use simstats::{candidate_rows, pair_stats, row_overlap, PairStats};
pub use synthgen::{sample_instance, LatentFn, LatentMeasure, LatentModelSpec, NoiseModel, SyntheticInstance};
pub use tensorize::{optimal_partition, tensor_complete, FlatteningPlan, PartitionMode};
