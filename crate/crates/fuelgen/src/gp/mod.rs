//! Stationary Gaussian process intensity fields on a regular grid.
//!
//! The dense covariance path ([`build_covariance`], [`sample_field`],
//! [`predict_at`]) is the reference implementation of the model. The
//! [`FieldSampler`] path exploits the tensor-grid factorization of the
//! squared-exponential kernel for the same math at O(d^3) instead of O(d^6)
//! and is what realization generation uses.

mod cov;
mod field;
mod grid;
mod transform;

pub use cov::{build_covariance, CovMatrix, DEFAULT_JITTER, MAX_JITTER};
pub use field::{kriging_mean, predict_at, sample_field, IntensityField};
pub use grid::{FieldPredictor, FieldSampler};
pub use transform::{
    logistic, transform_intensity, CovariateField, CovariateStack,
};
