//! Field realizations and kriging prediction via the dense covariance path.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::gp::cov::{se_kernel, CovMatrix};
use crate::seeding;

/// A gridded realization of the zero-mean intensity process.
///
/// `w[ix * d + iy]` is the field value at grid node `(x_ix, y_iy)`.
#[derive(Debug, Clone)]
pub struct IntensityField {
    pub domain: Domain,
    pub rho: f64,
    pub w: Vec<f64>,
    pub seed: u64,
}

impl IntensityField {
    /// Field value at a grid node.
    pub fn at_node(&self, ix: usize, iy: usize) -> f64 {
        self.w[ix * self.domain.grid_resolution + iy]
    }
}

/// Draw one field realization `W = L z` with `L` the Cholesky factor of the
/// covariance and `z` i.i.d. standard normal from the seeded source.
pub fn sample_field(cov: &CovMatrix, seed: u64) -> IntensityField {
    let n = cov.dim();
    let mut rng = seeding::rng(seed);
    let z = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
    let w = cov.cholesky().l() * z;
    IntensityField {
        domain: cov.domain().clone(),
        rho: cov.rho(),
        w: w.as_slice().to_vec(),
        seed,
    }
}

/// Kriging (GP conditional mean) prediction of the field at off-grid points.
///
/// With zero jitter the prediction reproduces grid values exactly when a
/// query coincides with a node.
pub fn predict_at(
    field: &IntensityField,
    cov: &CovMatrix,
    points: &[(f64, f64)],
) -> Result<Vec<f64>> {
    if field.w.len() != cov.dim() {
        return Err(Error::Input(format!(
            "field has {} values but covariance is {}-dimensional",
            field.w.len(),
            cov.dim()
        )));
    }
    for &(x, y) in points {
        if !cov.domain().contains(x, y) {
            return Err(Error::OutsideDomain(format!(
                "query point ({x}, {y}) lies outside the domain"
            )));
        }
    }
    let alpha = cov
        .cholesky()
        .solve(&DVector::from_column_slice(&field.w));
    Ok(points
        .iter()
        .map(|&(x, y)| {
            let k = cov.kernel_to_nodes(x, y);
            k.iter().zip(alpha.iter()).map(|(a, b)| a * b).sum()
        })
        .collect())
}

/// Kriging mean at a query point conditioned on an arbitrary set of sites.
///
/// Solves the full linear system directly; intended for small systems and as
/// an independent check of the grid-based predictor.
pub fn kriging_mean(
    sites: &[(f64, f64)],
    values: &[f64],
    rho: f64,
    jitter: f64,
    query: (f64, f64),
) -> Result<f64> {
    if sites.len() != values.len() || sites.is_empty() {
        return Err(Error::Input("sites and values must match and be non-empty".into()));
    }
    let n = sites.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let dx = sites[i].0 - sites[j].0;
            let dy = sites[i].1 - sites[j].1;
            k[(i, j)] = se_kernel(dx * dx + dy * dy, rho) + if i == j { jitter } else { 0.0 };
        }
    }
    let chol = Cholesky::new(k)
        .ok_or_else(|| Error::Numerical("kriging system not positive definite".into()))?;
    let alpha = chol.solve(&DVector::from_column_slice(values));
    let mut pred = 0.0;
    for i in 0..n {
        let dx = query.0 - sites[i].0;
        let dy = query.1 - sites[i].1;
        pred += se_kernel(dx * dx + dy * dy, rho) * alpha[i];
    }
    Ok(pred)
}
