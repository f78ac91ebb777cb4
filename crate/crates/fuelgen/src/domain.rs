//! Core spatial types: the study domain, model parameters, and disk layouts.

use crate::error::{Error, Result};

/// Rectangular study domain with the regular grid the intensity field lives on.
///
/// The grid has `grid_resolution` nodes per axis, spanning the extent
/// inclusively, so node spacing is `extent / (d - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    /// Nodes per axis of the intensity grid (d x d total).
    pub grid_resolution: usize,
}

impl Domain {
    pub fn new(
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        grid_resolution: usize,
    ) -> Result<Self> {
        if !(x_max > x_min && y_max > y_min) {
            return Err(Error::Parameter(format!(
                "domain extent must be positive: x [{x_min}, {x_max}], y [{y_min}, {y_max}]"
            )));
        }
        if ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter("domain bounds must be finite".into()));
        }
        if grid_resolution < 2 {
            return Err(Error::Parameter(format!(
                "grid resolution must be at least 2, got {grid_resolution}"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
            grid_resolution,
        })
    }

    /// Square domain `[0, side] x [0, side]` with an automatic grid resolution
    /// fine enough for lengthscale `rho_min` (spacing at most `rho_min / 2`,
    /// floor of 32 nodes per axis).
    pub fn square(side: f64, rho_min: f64) -> Result<Self> {
        let d = Self::auto_resolution(side, rho_min)?;
        Self::new(0.0, 0.0, side, side, d)
    }

    /// Grid resolution giving node spacing at most `rho_min / 2` over `extent`,
    /// with a floor of 32 nodes per axis.
    pub fn auto_resolution(extent: f64, rho_min: f64) -> Result<usize> {
        if rho_min <= 0.0 || !rho_min.is_finite() {
            return Err(Error::Parameter(format!(
                "rho_min must be positive and finite, got {rho_min}"
            )));
        }
        let needed = (extent / (rho_min / 2.0)).ceil() as usize + 1;
        Ok(needed.max(32))
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Grid node coordinates along x, endpoints inclusive.
    pub fn node_xs(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.grid_resolution)
    }

    /// Grid node coordinates along y, endpoints inclusive.
    pub fn node_ys(&self) -> Vec<f64> {
        linspace(self.y_min, self.y_max, self.grid_resolution)
    }

    /// Node spacing along x (equals y spacing for square domains).
    pub fn node_spacing(&self) -> (f64, f64) {
        let d = (self.grid_resolution - 1) as f64;
        (self.width() / d, self.height() / d)
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

/// The four calibrated parameters of the generative model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta {
    /// Gaussian process lengthscale, meters.
    pub rho: f64,
    /// Point density, points per square meter.
    pub lambda: f64,
    /// Disk radius mean, meters.
    pub mu: f64,
    /// Disk radius standard deviation, meters.
    pub sigma: f64,
}

impl Theta {
    pub fn new(rho: f64, lambda: f64, mu: f64, sigma: f64) -> Result<Self> {
        let t = Self {
            rho,
            lambda,
            mu,
            sigma,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rho", self.rho),
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("sigma", self.sigma),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "theta.{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.rho, self.lambda, self.mu, self.sigma]
    }
}

/// One grain of the mosaic: a disk with center and radius in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl Disk {
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let dx = px - self.x;
        let dy = py - self.y;
        dx * dx + dy * dy <= self.r * self.r
    }
}

/// A germ-grain realization: disk centers and radii on a domain.
///
/// The binary map is the union of the disks; disks may extend past the
/// domain boundary, and metrics clip to the domain.
#[derive(Debug, Clone)]
pub struct DiskSet {
    pub domain: Domain,
    pub disks: Vec<Disk>,
    /// Seed used to generate this layout; absent for observed data.
    pub seed: Option<u64>,
    /// Parameters that generated this layout; absent for observed data.
    pub theta: Option<Theta>,
}

impl DiskSet {
    /// Wrap disks as a layout, validating radii and center containment.
    pub fn new(domain: Domain, disks: Vec<Disk>) -> Result<Self> {
        for (i, d) in disks.iter().enumerate() {
            if !(d.r > 0.0) || !d.r.is_finite() {
                return Err(Error::Parameter(format!(
                    "disk {i} has non-positive radius {}",
                    d.r
                )));
            }
            if !domain.contains(d.x, d.y) {
                return Err(Error::OutsideDomain(format!(
                    "disk {i} center ({}, {}) lies outside the domain",
                    d.x, d.y
                )));
            }
        }
        Ok(Self {
            domain,
            disks,
            seed: None,
            theta: None,
        })
    }

    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }
}
