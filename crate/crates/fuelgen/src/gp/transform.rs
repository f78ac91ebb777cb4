//! Logistic transform of the field, with optional spatial covariates.

use crate::domain::Domain;
use crate::error::{Error, Result};

/// Numerically safe logistic, clamped strictly inside (0, 1).
pub fn logistic(x: f64) -> f64 {
    let v = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    v.clamp(1e-300, 1.0 - 1e-16)
}

/// A gridded covariate raster with values in [-1, 1].
///
/// Values are stored row-major from the north edge (row 0 spans `y_max`),
/// one value per pixel, and are interpreted as proportional to a likelihood
/// of fuel at that location.
#[derive(Debug, Clone)]
pub struct CovariateField {
    pub ncols: usize,
    pub nrows: usize,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    values: Vec<f64>,
}

impl CovariateField {
    pub fn new(
        ncols: usize,
        nrows: usize,
        extent: (f64, f64, f64, f64),
        values: Vec<f64>,
    ) -> Result<Self> {
        let (x_min, y_min, x_max, y_max) = extent;
        if ncols == 0 || nrows == 0 || values.len() != ncols * nrows {
            return Err(Error::Input(format!(
                "covariate grid {ncols}x{nrows} does not match {} values",
                values.len()
            )));
        }
        if !(x_max > x_min && y_max > y_min) {
            return Err(Error::Input("covariate extent must be positive".into()));
        }
        let f = Self {
            ncols,
            nrows,
            x_min,
            y_min,
            x_max,
            y_max,
            values,
        };
        f.validate()?;
        Ok(f)
    }

    /// Check every value lies in [-1, 1].
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            if !v.is_finite() || *v < -1.0 || *v > 1.0 {
                return Err(Error::Input(format!(
                    "covariate value {v} at index {i} outside [-1, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Bilinear sample at a point, clamped to the pixel-center lattice edge.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let px = (x - self.x_min) / (self.x_max - self.x_min) * self.ncols as f64 - 0.5;
        // row 0 is the north edge
        let py = (self.y_max - y) / (self.y_max - self.y_min) * self.nrows as f64 - 0.5;
        let px = px.clamp(0.0, (self.ncols - 1) as f64);
        let py = py.clamp(0.0, (self.nrows - 1) as f64);
        let c0 = px.floor() as usize;
        let r0 = py.floor() as usize;
        let c1 = (c0 + 1).min(self.ncols - 1);
        let r1 = (r0 + 1).min(self.nrows - 1);
        let fx = px - c0 as f64;
        let fy = py - r0 as f64;
        let at = |r: usize, c: usize| self.values[r * self.ncols + c];
        let top = at(r0, c0) * (1.0 - fx) + at(r0, c1) * fx;
        let bot = at(r1, c0) * (1.0 - fx) + at(r1, c1) * fx;
        top * (1.0 - fy) + bot * fy
    }

    /// Whether the raster extent matches a domain within tolerance.
    pub fn covers(&self, domain: &Domain) -> bool {
        let tol = 1e-6;
        (self.x_min - domain.x_min).abs() < tol
            && (self.y_min - domain.y_min).abs() < tol
            && (self.x_max - domain.x_max).abs() < tol
            && (self.y_max - domain.y_max).abs() < tol
    }
}

/// Covariate rasters with their weights; `beta[0]` multiplies the field and
/// `beta[k]` multiplies covariate `k - 1`.
#[derive(Debug, Clone, Default)]
pub struct CovariateStack {
    pub fields: Vec<CovariateField>,
    pub beta: Vec<f64>,
}

impl CovariateStack {
    pub fn new(fields: Vec<CovariateField>, beta: Vec<f64>) -> Result<Self> {
        if beta.len() != fields.len() + 1 {
            return Err(Error::Input(format!(
                "need {} weights (beta_0 plus one per covariate), got {}",
                fields.len() + 1,
                beta.len()
            )));
        }
        if beta.iter().any(|b| *b < 0.0 || !b.is_finite()) {
            return Err(Error::Input("covariate weights must be non-negative".into()));
        }
        Ok(Self { fields, beta })
    }

    /// Plain field passthrough: `beta_0 = 1`, no covariates.
    pub fn identity() -> Self {
        Self {
            fields: Vec::new(),
            beta: vec![1.0],
        }
    }

    pub fn validate_against(&self, domain: &Domain) -> Result<()> {
        for (k, f) in self.fields.iter().enumerate() {
            f.validate()?;
            if !f.covers(domain) {
                return Err(Error::Input(format!(
                    "covariate {k} extent does not match the domain"
                )));
            }
        }
        Ok(())
    }

    /// Linear predictor `beta_0 w + sum_k beta_k X_k(x, y)` at a point.
    pub fn linear_predictor(&self, w: f64, x: f64, y: f64) -> f64 {
        let mut acc = self.beta[0] * w;
        for (f, b) in self.fields.iter().zip(&self.beta[1..]) {
            if *b != 0.0 {
                acc += b * f.value_at(x, y);
            }
        }
        acc
    }
}

/// Transform gridded field values into relative intensities
/// `omega = logistic(beta_0 W + sum_k beta_k X_k)`, evaluated at grid nodes.
pub fn transform_intensity(
    w: &[f64],
    domain: &Domain,
    covariates: &CovariateStack,
) -> Result<Vec<f64>> {
    let d = domain.grid_resolution;
    if w.len() != d * d {
        return Err(Error::Input(format!(
            "field has {} values, expected {}",
            w.len(),
            d * d
        )));
    }
    covariates.validate_against(domain)?;
    let xs = domain.node_xs();
    let ys = domain.node_ys();
    let mut omega = Vec::with_capacity(w.len());
    for ix in 0..d {
        for iy in 0..d {
            let lin = covariates.linear_predictor(w[ix * d + iy], xs[ix], ys[iy]);
            omega.push(logistic(lin));
        }
    }
    Ok(omega)
}
