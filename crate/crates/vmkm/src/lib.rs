//! Variance-based moving k-means clustering, with the classical baselines it
//! is usually measured against and an evaluation harness.
//!
//! The engine assigns elements by squared Mahalanobis distance against
//! per-cluster covariances, then moves poorly correlated elements out of the
//! largest cluster and feeds the smallest cluster from its neighbour until
//! cluster fitnesses become comparable. The construction keeps every cluster
//! populated, so dead centers cannot survive a run.
//!
//! Baselines (plain k-means, moving k-means, fuzzy c-means, RBF kernel
//! k-means) emit the same report shape, and the harness runs paired
//! initialization-sensitivity trials and MSE comparison tables over them.

pub mod baselines;
pub mod dataio;
pub mod distances;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod model;

pub use baselines::{
    initial_assignments_from_centers, run_fcm, run_kernel_kmeans, run_kmeans, run_mkm,
    BaselineParams, GammaChoice,
};
pub use engine::{run_vmkm, NestedOutcome, TransferDecision, TransferRule};
pub use error::{Error, Result};
pub use metrics::{
    build_comparison_table, cluster_variance, fitness, mse, run_algorithm, run_sensitivity,
    Algorithm, ComparisonTable, RunConfig, SensitivityResult, SummaryStats,
};
pub use model::{
    init_centers_explicit, init_centers_random, validate_dataset, AlphaState, ClusterState,
    Dataset, RunReport, TerminationReason, VmkmParams,
};
