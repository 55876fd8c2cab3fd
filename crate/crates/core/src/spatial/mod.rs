//! Spatial filtering: class covariances, CSP and Tikhonov-regularised
//! CSP, log-variance features, and filter-bank CSP with
//! mutual-information feature selection.

mod covariance;
mod csp;
mod fbcsp;
mod features;
mod mi;

pub use covariance::{class_mean_covariance, mean_covariance, trial_covariance, CovMatrix};
pub use csp::{solve_csp, solve_trcsp, SpatialFilters, TrcspParams, RIDGE_EPS};
pub use fbcsp::{
    csp_from_covariances, fit_fbcsp, mean_class_covariances, fit_fbcsp_from_covariances, transform_fbcsp, transform_fbcsp_from_covariances, FbcspModel,
};
pub use features::{
    build_feature_set, features_from_covariance, log_variance_features, spatial_filter_trial, FeatureMatrix,
};
pub use mi::mutual_information;

/// Filter pairs per extreme when unspecified.
pub const DEFAULT_M: usize = 2;
/// Tikhonov weight when unspecified (relative to trace-normalised covariances).
pub const DEFAULT_ALPHA: f64 = 1e-3;
pub const DEFAULT_N_BINS: usize = 10;
pub const DEFAULT_K_SELECT: usize = 4;
