//! Binary rasterization of disk layouts and raster-side pattern metrics.

use crate::domain::{DiskSet, Domain};
use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

/// Binary occupancy raster over a rectangular window.
///
/// Pixels are stored row-major from the north edge (row 0 spans `y_max`),
/// matching the PGM file layout. A pixel is occupied when its center lies
/// within some disk. The requested pixel size is adjusted to the nearest
/// exact tiling of the window.
#[derive(Debug, Clone)]
pub struct BinaryRaster {
    pub domain: Domain,
    pub width: usize,
    pub height: usize,
    /// Effective pixel sizes after fitting an integer number of pixels.
    pub pixel_x: f64,
    pub pixel_y: f64,
    pub bits: Vec<bool>,
}

impl BinaryRaster {
    pub fn empty(domain: Domain, pixel_size: f64) -> Result<Self> {
        if !(pixel_size > 0.0) || !pixel_size.is_finite() {
            return Err(Error::Parameter(format!(
                "pixel size must be positive, got {pixel_size}"
            )));
        }
        if pixel_size > domain.width() || pixel_size > domain.height() {
            return Err(Error::Parameter(format!(
                "pixel size {pixel_size} exceeds the domain extent"
            )));
        }
        let width = (domain.width() / pixel_size).round().max(1.0) as usize;
        let height = (domain.height() / pixel_size).round().max(1.0) as usize;
        let pixel_x = domain.width() / width as f64;
        let pixel_y = domain.height() / height as f64;
        Ok(Self {
            bits: vec![false; width * height],
            domain,
            width,
            height,
            pixel_x,
            pixel_y,
        })
    }

    pub fn total_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn occupied_pixels(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.bits[row * self.width + col] = v;
    }

    /// Pixel center coordinates.
    pub fn center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.domain.x_min + (col as f64 + 0.5) * self.pixel_x,
            self.domain.y_max - (row as f64 + 0.5) * self.pixel_y,
        )
    }

    /// Average covered proportion per cell of an `nx x ny` sub-domain grid,
    /// row-major with cell (0, 0) at the south-west corner.
    pub fn cell_proportions(&self, nx: usize, ny: usize) -> Vec<f64> {
        let mut occupied = vec![0usize; nx * ny];
        let mut totals = vec![0usize; nx * ny];
        let cell_w = self.domain.width() / nx as f64;
        let cell_h = self.domain.height() / ny as f64;
        for row in 0..self.height {
            for col in 0..self.width {
                let (x, y) = self.center(row, col);
                let cx = (((x - self.domain.x_min) / cell_w) as usize).min(nx - 1);
                let cy = (((y - self.domain.y_min) / cell_h) as usize).min(ny - 1);
                let idx = cy * nx + cx;
                totals[idx] += 1;
                if self.get(row, col) {
                    occupied[idx] += 1;
                }
            }
        }
        occupied
            .iter()
            .zip(&totals)
            .map(|(o, t)| if *t == 0 { 0.0 } else { *o as f64 / *t as f64 })
            .collect()
    }
}

/// Rasterize the union of disks over the layout's own domain.
pub fn rasterize(disks: &DiskSet, pixel_size: f64) -> Result<BinaryRaster> {
    rasterize_window(disks, pixel_size, &disks.domain)
}

/// Rasterize the union of disks over an arbitrary viewport window; geometry
/// outside the window is clipped away.
pub fn rasterize_window(
    disks: &DiskSet,
    pixel_size: f64,
    window: &Domain,
) -> Result<BinaryRaster> {
    let mut raster = BinaryRaster::empty(window.clone(), pixel_size)?;
    let (w, h) = (raster.width, raster.height);
    let (px, py) = (raster.pixel_x, raster.pixel_y);
    for disk in &disks.disks {
        let row_lo = ((window.y_max - (disk.y + disk.r)) / py - 0.5).ceil().max(0.0) as isize;
        let row_hi = ((window.y_max - (disk.y - disk.r)) / py - 0.5).floor() as isize;
        let row_hi = row_hi.min(h as isize - 1);
        for row in row_lo..=row_hi {
            let cy = window.y_max - (row as f64 + 0.5) * py;
            let dy = cy - disk.y;
            let span_sq = disk.r * disk.r - dy * dy;
            if span_sq < 0.0 {
                continue;
            }
            let span = span_sq.sqrt();
            let col_lo = (((disk.x - span) - window.x_min) / px - 0.5).ceil().max(0.0) as isize;
            let col_hi = (((disk.x + span) - window.x_min) / px - 0.5).floor() as isize;
            let col_hi = col_hi.min(w as isize - 1);
            for col in col_lo..=col_hi {
                raster.bits[row as usize * w + col as usize] = true;
            }
        }
    }
    Ok(raster)
}

/// Raster-side pattern metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterMetrics {
    /// Proportion of occupied pixels.
    pub area: f64,
    /// Boundary length in meters.
    pub perimeter: f64,
    /// Connected components of the occupied region (8-connectivity).
    pub ncc: usize,
    /// Holes: background components (4-connectivity) not touching the border.
    pub holes: usize,
}

/// Compute area, perimeter, component count, and hole count from a raster.
///
/// Perimeter counts occupied pixels with an edge-adjacent unoccupied
/// neighbor at weight 1, and occupied pixels whose only unoccupied exposure
/// is diagonal at weight sqrt(2), scaled by the pixel size. Pixels beyond the
/// raster edge count as unoccupied.
pub fn raster_metrics(raster: &BinaryRaster) -> Result<RasterMetrics> {
    if raster.total_pixels() == 0 {
        return Err(Error::Input("raster has no pixels".into()));
    }
    let area = raster.occupied_pixels() as f64 / raster.total_pixels() as f64;
    let perimeter = raster_perimeter(raster);
    let ncc = occupied_components(raster);
    let holes = raster_holes(raster);
    Ok(RasterMetrics {
        area,
        perimeter,
        ncc,
        holes,
    })
}

fn raster_perimeter(raster: &BinaryRaster) -> f64 {
    let (w, h) = (raster.width as isize, raster.height as isize);
    let occupied = |r: isize, c: isize| -> bool {
        r >= 0 && c >= 0 && r < h && c < w && raster.bits[(r * w + c) as usize]
    };
    let mut edge_exposed = 0usize;
    let mut diag_exposed = 0usize;
    for r in 0..h {
        for c in 0..w {
            if !occupied(r, c) {
                continue;
            }
            let edge = !occupied(r - 1, c)
                || !occupied(r + 1, c)
                || !occupied(r, c - 1)
                || !occupied(r, c + 1);
            if edge {
                edge_exposed += 1;
            } else {
                let diag = !occupied(r - 1, c - 1)
                    || !occupied(r - 1, c + 1)
                    || !occupied(r + 1, c - 1)
                    || !occupied(r + 1, c + 1);
                if diag {
                    diag_exposed += 1;
                }
            }
        }
    }
    let scale = 0.5 * (raster.pixel_x + raster.pixel_y);
    (edge_exposed as f64 + std::f64::consts::SQRT_2 * diag_exposed as f64) * scale
}

fn occupied_components(raster: &BinaryRaster) -> usize {
    let (w, h) = (raster.width, raster.height);
    let mut uf = UnionFind::new(w * h);
    for r in 0..h {
        for c in 0..w {
            if !raster.get(r, c) {
                continue;
            }
            let idx = (r * w + c) as u32;
            // union with already-visited 8-neighbors: W, NW, N, NE
            if c > 0 && raster.get(r, c - 1) {
                uf.union(idx, idx - 1);
            }
            if r > 0 {
                if raster.get(r - 1, c) {
                    uf.union(idx, idx - w as u32);
                }
                if c > 0 && raster.get(r - 1, c - 1) {
                    uf.union(idx, idx - w as u32 - 1);
                }
                if c + 1 < w && raster.get(r - 1, c + 1) {
                    uf.union(idx, idx - w as u32 + 1);
                }
            }
        }
    }
    let members: Vec<u32> = (0..w * h)
        .filter(|i| raster.bits[*i])
        .map(|i| i as u32)
        .collect();
    uf.count_roots(members.into_iter())
}

fn raster_holes(raster: &BinaryRaster) -> usize {
    let (w, h) = (raster.width, raster.height);
    let mut uf = UnionFind::new(w * h);
    for r in 0..h {
        for c in 0..w {
            if raster.get(r, c) {
                continue;
            }
            let idx = (r * w + c) as u32;
            // 4-connectivity on the background: W and N
            if c > 0 && !raster.get(r, c - 1) {
                uf.union(idx, idx - 1);
            }
            if r > 0 && !raster.get(r - 1, c) {
                uf.union(idx, idx - w as u32);
            }
        }
    }
    // background components touching the raster border are not holes
    let mut border_roots: Vec<u32> = Vec::new();
    for c in 0..w {
        for r in [0, h - 1] {
            if !raster.get(r, c) {
                border_roots.push(uf.find((r * w + c) as u32));
            }
        }
    }
    for r in 0..h {
        for c in [0, w - 1] {
            if !raster.get(r, c) {
                border_roots.push(uf.find((r * w + c) as u32));
            }
        }
    }
    border_roots.sort_unstable();
    border_roots.dedup();

    let mut all_roots: Vec<u32> = (0..w * h)
        .filter(|i| !raster.bits[*i])
        .map(|i| uf.find(i as u32))
        .collect();
    all_roots.sort_unstable();
    all_roots.dedup();
    all_roots.len() - border_roots.len()
}
