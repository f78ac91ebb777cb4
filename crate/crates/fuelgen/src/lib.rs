//! Calibratable generative model for heterogeneous mid-story wildland fuels.
//!
//! The model lays out binary mosaics as unions of disks: disk centers follow
//! a point process whose relative intensity is a logistic-transformed
//! Gaussian process, counts are Poisson in the domain area, and radii are
//! truncated normal. Layouts are summarized by a fixed 13-entry metric
//! vector, and the four model parameters (lengthscale, density, radius mean
//! and spread) are inferred from observed layouts by random-walk
//! Metropolis–Hastings with a stochastic likelihood over those metrics.
//!
//! Modules:
//! - [`gp`]: gridded Gaussian process fields, kriging, logistic transform
//! - [`generator`]: disk-layout realizations from parameters
//! - [`raster`]: binary rasterization and raster-side metrics
//! - [`metrics`]: the ordered summary vector and its components
//! - [`calibrate`]: stochastic-likelihood MCMC over the four parameters
//! - [`ingest`]: point-cloud reduction to disk observations
//! - [`io`]: file formats (disk CSV, metrics CSV, PGM, covariate grids)
//! - [`render`]: SVG figures

pub mod calibrate;
pub mod domain;
pub mod error;
pub mod generator;
pub mod gp;
pub mod ingest;
pub mod io;
pub mod metrics;
pub mod raster;
pub mod render;
pub mod seeding;
pub mod stats;

mod unionfind;

pub use domain::{Disk, DiskSet, Domain, Theta};
pub use error::{Error, Result};
