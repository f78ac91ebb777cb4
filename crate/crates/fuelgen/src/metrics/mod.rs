//! The ordered summary-metric vector extracted from disk layouts or rasters.

mod disks;
mod grid;

pub use disks::{
    disk_area_mc, disk_holes, disk_ncc, disk_perimeter, holes_resolution_adequate,
};
pub use grid::{grid_metrics, moran_geary, summarize_cells, Adjacency, GridMetrics, GridSpec};

use crate::domain::DiskSet;
use crate::error::Result;
use crate::raster::{raster_metrics, BinaryRaster};
use crate::seeding;
use crate::stats;

/// Number of entries in the metric vector.
pub const METRIC_COUNT: usize = 13;

/// Metric names in vector order.
pub const METRIC_NAMES: [&str; METRIC_COUNT] = [
    "area",
    "perimeter",
    "ncc",
    "holes",
    "moran_i",
    "geary_c",
    "subarea_sum",
    "n_full_cells",
    "n_empty_cells",
    "subarea_variance",
    "lambda_hat",
    "mu_hat",
    "sigma_hat",
];

/// Ordered summary vector of a binary mosaic.
///
/// Entries that are undefined for a given layout (zero-variance
/// autocorrelation, radius statistics of an empty set, disk-only estimates
/// of a raster) are imputed to zero and flagged so downstream likelihood
/// code can exclude them.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsVector {
    pub values: [f64; METRIC_COUNT],
    /// True where the corresponding value is undefined and imputed.
    pub flags: [bool; METRIC_COUNT],
}

impl MetricsVector {
    pub fn flagged_names(&self) -> Vec<&'static str> {
        METRIC_NAMES
            .iter()
            .zip(&self.flags)
            .filter(|(_, f)| **f)
            .map(|(n, _)| *n)
            .collect()
    }
}

/// Sampling settings for metric extraction.
#[derive(Debug, Clone)]
pub struct MetricsConfig {
    /// Monte Carlo samples for the union-area estimate.
    pub area_samples: usize,
    /// Circumference points per disk for the perimeter estimate.
    pub points_per_disk: usize,
    /// Monte Carlo samples per sub-domain cell.
    pub samples_per_cell: usize,
    /// Rasterization pixel size for hole counting, meters.
    pub holes_pixel_size: f64,
    pub grid: GridSpec,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            area_samples: 8192,
            points_per_disk: 256,
            samples_per_cell: 64,
            holes_pixel_size: 0.05,
            grid: GridSpec::default(),
        }
    }
}

/// Empirical parameter estimates read directly off a layout.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalEstimates {
    /// Points per square meter, `n / A_D`.
    pub lambda_hat: f64,
    /// Mean radius; `None` for an empty layout.
    pub mu_hat: Option<f64>,
    /// Radius standard deviation; `None` with fewer than two disks.
    pub sigma_hat: Option<f64>,
}

/// Compute `lambda_hat`, `mu_hat`, `sigma_hat` from a layout.
pub fn empirical_estimates(disks: &DiskSet) -> EmpiricalEstimates {
    let n = disks.len();
    let lambda_hat = n as f64 / disks.domain.area();
    let radii: Vec<f64> = disks.disks.iter().map(|d| d.r).collect();
    let mu_hat = (n >= 1).then(|| stats::mean(&radii));
    let sigma_hat = (n >= 2).then(|| stats::sample_sd(&radii));
    EmpiricalEstimates {
        lambda_hat,
        mu_hat,
        sigma_hat,
    }
}

/// Assemble the full 13-entry metric vector from a disk layout.
pub fn metrics_vector(disks: &DiskSet, config: &MetricsConfig, seed: u64) -> Result<MetricsVector> {
    let area = disk_area_mc(disks, config.area_samples, seeding::derive(seed, 0))?;
    let perimeter = disk_perimeter(disks, config.points_per_disk)?;
    let ncc = disk_ncc(disks);
    let holes = disk_holes(disks, config.holes_pixel_size)?;
    let gm = grid_metrics(
        disks,
        &config.grid,
        config.samples_per_cell,
        seeding::derive(seed, 1),
    )?;
    let est = empirical_estimates(disks);
    Ok(assemble(
        area,
        perimeter,
        ncc as f64,
        holes as f64,
        &gm,
        Some(est),
    ))
}

/// Assemble the metric vector from a binary raster.
///
/// Grid-cell proportions are exact pixel counts rather than Monte Carlo;
/// the disk-only empirical estimates are flagged absent.
pub fn metrics_vector_from_raster(
    raster: &BinaryRaster,
    config: &MetricsConfig,
) -> Result<MetricsVector> {
    let rm = raster_metrics(raster)?;
    let (nx, ny) = config
        .grid
        .cells_for(raster.domain.width(), raster.domain.height())?;
    let cells = raster.cell_proportions(nx, ny);
    let gm = summarize_cells(&cells, nx, ny, &config.grid, 1.0)?;
    Ok(assemble(
        rm.area,
        rm.perimeter,
        rm.ncc as f64,
        rm.holes as f64,
        &gm,
        None,
    ))
}

fn assemble(
    area: f64,
    perimeter: f64,
    ncc: f64,
    holes: f64,
    gm: &GridMetrics,
    est: Option<EmpiricalEstimates>,
) -> MetricsVector {
    let mut values = [0.0; METRIC_COUNT];
    let mut flags = [false; METRIC_COUNT];
    values[0] = area;
    values[1] = perimeter;
    values[2] = ncc;
    values[3] = holes;
    match gm.moran_i {
        Some(v) => values[4] = v,
        None => flags[4] = true,
    }
    match gm.geary_c {
        Some(v) => values[5] = v,
        None => flags[5] = true,
    }
    values[6] = gm.subarea_sum;
    values[7] = gm.n_full_cells as f64;
    values[8] = gm.n_empty_cells as f64;
    values[9] = gm.subarea_variance;
    match est {
        Some(e) => {
            values[10] = e.lambda_hat;
            match e.mu_hat {
                Some(v) => values[11] = v,
                None => flags[11] = true,
            }
            match e.sigma_hat {
                Some(v) => values[12] = v,
                None => flags[12] = true,
            }
        }
        None => {
            flags[10] = true;
            flags[11] = true;
            flags[12] = true;
        }
    }
    MetricsVector { values, flags }
}
