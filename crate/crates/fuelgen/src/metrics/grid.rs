//! Sub-domain grid metrics: per-cell covered area, spatial autocorrelation,
//! and cell occupancy counts.

use rand::Rng;

use crate::domain::DiskSet;
use crate::error::{Error, Result};
use crate::metrics::disks::DiskIndex;
use crate::seeding;
use crate::stats;

/// Neighbourhood rule for the autocorrelation weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Adjacency {
    /// Edge neighbours only (von Neumann).
    #[default]
    Rook,
    /// Edge and corner neighbours (Moore).
    Queen,
}

/// Sub-domain grid specification for the grid-area metrics.
#[derive(Debug, Clone)]
pub struct GridSpec {
    /// Cell side length in meters.
    pub cell_size: f64,
    pub adjacency: Adjacency,
    /// Row-standardize the weight matrix before computing the statistics.
    pub row_standardized: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cell_size: 1.0,
            adjacency: Adjacency::Rook,
            row_standardized: false,
        }
    }
}

impl GridSpec {
    /// Cell counts per axis; the cell size must tile the extent within one
    /// cell of slack.
    pub fn cells_for(&self, width: f64, height: f64) -> Result<(usize, usize)> {
        if !(self.cell_size > 0.0) || !self.cell_size.is_finite() {
            return Err(Error::Parameter(format!(
                "cell size must be positive, got {}",
                self.cell_size
            )));
        }
        let nx = (width / self.cell_size).round().max(1.0) as usize;
        let ny = (height / self.cell_size).round().max(1.0) as usize;
        if (nx as f64 * self.cell_size - width).abs() > self.cell_size
            || (ny as f64 * self.cell_size - height).abs() > self.cell_size
        {
            return Err(Error::Parameter(format!(
                "cell size {} does not tile the {width} x {height} domain",
                self.cell_size
            )));
        }
        Ok((nx, ny))
    }
}

/// Grid-area metric block. Autocorrelation statistics are `None` when every
/// cell value is identical (zero variance).
#[derive(Debug, Clone)]
pub struct GridMetrics {
    pub moran_i: Option<f64>,
    pub geary_c: Option<f64>,
    /// Total covered area as a proportion of the domain area.
    pub subarea_sum: f64,
    pub n_full_cells: usize,
    pub n_empty_cells: usize,
    pub subarea_variance: f64,
    pub total_cells: usize,
}

/// Estimate per-cell covered proportions by Monte Carlo and summarize them.
///
/// A cell counts as full when its proportion reaches `1 - 1/samples_per_cell`
/// and as empty when no sample hit. Each cell draws from its own substream.
pub fn grid_metrics(
    disks: &DiskSet,
    spec: &GridSpec,
    samples_per_cell: usize,
    seed: u64,
) -> Result<GridMetrics> {
    if samples_per_cell == 0 {
        return Err(Error::Parameter("samples_per_cell must be positive".into()));
    }
    let dom = &disks.domain;
    let (nx, ny) = spec.cells_for(dom.width(), dom.height())?;
    let cell_w = dom.width() / nx as f64;
    let cell_h = dom.height() / ny as f64;
    let index = (!disks.is_empty()).then(|| DiskIndex::new(disks));

    let mut values = vec![0.0f64; nx * ny];
    for cy in 0..ny {
        for cx in 0..nx {
            let cell_idx = cy * nx + cx;
            let x0 = dom.x_min + cx as f64 * cell_w;
            let y0 = dom.y_min + cy as f64 * cell_h;
            let covered = match &index {
                None => 0,
                Some(ix) => {
                    let mut rng = seeding::stream_rng(seed, cell_idx as u64);
                    (0..samples_per_cell)
                        .filter(|_| {
                            let x = x0 + rng.random::<f64>() * cell_w;
                            let y = y0 + rng.random::<f64>() * cell_h;
                            ix.covered(x, y)
                        })
                        .count()
                }
            };
            values[cell_idx] = covered as f64 / samples_per_cell as f64;
        }
    }
    summarize_cells(&values, nx, ny, spec, 1.0 - 1.0 / samples_per_cell as f64)
}

/// Summarize an existing grid of per-cell covered proportions.
pub fn summarize_cells(
    values: &[f64],
    nx: usize,
    ny: usize,
    spec: &GridSpec,
    full_threshold: f64,
) -> Result<GridMetrics> {
    if values.len() != nx * ny || values.is_empty() {
        return Err(Error::Input("cell grid dimensions mismatch".into()));
    }
    let (moran_i, geary_c) = match moran_geary(values, nx, ny, spec.adjacency, spec.row_standardized)
    {
        Some((i, c)) => (Some(i), Some(c)),
        None => (None, None),
    };
    let n_full = values.iter().filter(|v| **v >= full_threshold).count();
    let n_empty = values.iter().filter(|v| **v == 0.0).count();
    Ok(GridMetrics {
        moran_i,
        geary_c,
        subarea_sum: stats::mean(values),
        n_full_cells: n_full,
        n_empty_cells: n_empty,
        subarea_variance: stats::sample_variance(values),
        total_cells: values.len(),
    })
}

/// Moran's I and Geary's C over a gridded value surface with binary
/// adjacency weights. Returns `None` when the values have zero variance.
pub fn moran_geary(
    values: &[f64],
    nx: usize,
    ny: usize,
    adjacency: Adjacency,
    row_standardized: bool,
) -> Option<(f64, f64)> {
    let n = values.len();
    debug_assert_eq!(n, nx * ny);
    let mean = stats::mean(values);
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss == 0.0 || n < 2 {
        return None;
    }

    let offsets: &[(isize, isize)] = match adjacency {
        Adjacency::Rook => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Adjacency::Queen => &[
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ],
    };

    let mut w_sum = 0.0f64;
    let mut cross = 0.0f64;
    let mut sq_diff = 0.0f64;
    for cy in 0..ny as isize {
        for cx in 0..nx as isize {
            let i = (cy * nx as isize + cx) as usize;
            let degree = offsets
                .iter()
                .filter(|(dx, dy)| {
                    let (jx, jy) = (cx + dx, cy + dy);
                    jx >= 0 && jy >= 0 && jx < nx as isize && jy < ny as isize
                })
                .count();
            if degree == 0 {
                continue;
            }
            let w = if row_standardized {
                1.0 / degree as f64
            } else {
                1.0
            };
            let zi = values[i] - mean;
            for (dx, dy) in offsets {
                let (jx, jy) = (cx + dx, cy + dy);
                if jx < 0 || jy < 0 || jx >= nx as isize || jy >= ny as isize {
                    continue;
                }
                let j = (jy * nx as isize + jx) as usize;
                let zj = values[j] - mean;
                w_sum += w;
                cross += w * zi * zj;
                let d = values[i] - values[j];
                sq_diff += w * d * d;
            }
        }
    }
    if w_sum == 0.0 {
        return None;
    }
    let nf = n as f64;
    let moran = (nf / w_sum) * (cross / ss);
    let geary = ((nf - 1.0) / (2.0 * w_sum)) * (sq_diff / ss);
    Some((moran, geary))
}
