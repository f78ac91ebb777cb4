//! Dense covariance matrices for the gridded intensity field.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::domain::Domain;
use crate::error::{Error, Result};

/// Starting diagonal jitter for Cholesky conditioning.
pub const DEFAULT_JITTER: f64 = 1e-8;
/// Jitter escalation stops here; beyond this we would be altering the model.
pub const MAX_JITTER: f64 = 1e-4;

/// Squared-exponential covariance between grid nodes, with unit marginal
/// variance: `k(a, b) = exp(-||a - b||^2 / (2 rho^2))`.
pub fn se_kernel(dist_sq: f64, rho: f64) -> f64 {
    (-dist_sq / (2.0 * rho * rho)).exp()
}

/// Dense covariance matrix over the `d*d` grid nodes of a domain, factored
/// and ready to sample from.
///
/// Node `i` corresponds to grid position `(ix, iy) = (i / d, i % d)`.
pub struct CovMatrix {
    domain: Domain,
    rho: f64,
    /// Kernel matrix without jitter.
    kernel: DMatrix<f64>,
    /// Jitter actually applied to the diagonal (after any escalation).
    jitter: f64,
    chol: Cholesky<f64, Dyn>,
}

impl CovMatrix {
    /// Entry `(i, j)` of the jittered covariance matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.kernel[(i, j)] + if i == j { self.jitter } else { 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Jitter in effect after any escalation.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub(crate) fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    /// Kernel vector between an arbitrary point and every grid node.
    pub(crate) fn kernel_to_nodes(&self, x: f64, y: f64) -> Vec<f64> {
        let xs = self.domain.node_xs();
        let ys = self.domain.node_ys();
        let d = self.domain.grid_resolution;
        let mut k = Vec::with_capacity(d * d);
        for &nx in &xs {
            for &ny in &ys {
                let dx = x - nx;
                let dy = y - ny;
                k.push(se_kernel(dx * dx + dy * dy, self.rho));
            }
        }
        k
    }
}

/// Build the squared-exponential covariance matrix over the domain grid.
///
/// Entry `(i, j)` is `exp(-||s_i - s_j||^2 / (2 rho^2)) + jitter * [i == j]`.
/// If the Cholesky factorization fails at the requested jitter, the jitter is
/// escalated tenfold (from [`DEFAULT_JITTER`] when starting at zero) up to
/// [`MAX_JITTER`] before giving up.
pub fn build_covariance(domain: &Domain, rho: f64, jitter: f64) -> Result<CovMatrix> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Parameter(format!(
            "rho must be strictly positive and finite, got {rho}"
        )));
    }
    if jitter < 0.0 || !jitter.is_finite() {
        return Err(Error::Parameter(format!(
            "jitter must be non-negative, got {jitter}"
        )));
    }

    let d = domain.grid_resolution;
    let xs = domain.node_xs();
    let ys = domain.node_ys();
    let n = d * d;
    let mut kernel = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let (xi, yi) = (xs[i / d], ys[i % d]);
        for j in i..n {
            let (xj, yj) = (xs[j / d], ys[j % d]);
            let dx = xi - xj;
            let dy = yi - yj;
            let v = se_kernel(dx * dx + dy * dy, rho);
            kernel[(i, j)] = v;
            kernel[(j, i)] = v;
        }
    }

    let (chol, jitter) = jittered_cholesky(&kernel, jitter)?;
    Ok(CovMatrix {
        domain: domain.clone(),
        rho,
        kernel,
        jitter,
        chol,
    })
}

/// Factor `kernel + jitter * I`, escalating the jitter tenfold on failure.
pub(crate) fn jittered_cholesky(
    kernel: &DMatrix<f64>,
    jitter: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut j = jitter;
    loop {
        let mut m = kernel.clone();
        if j > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += j;
            }
        }
        match Cholesky::new(m) {
            Some(c) => return Ok((c, j)),
            None if j < MAX_JITTER => {
                j = if j == 0.0 { DEFAULT_JITTER } else { j * 10.0 };
            }
            None => {
                return Err(Error::Numerical(format!(
                    "covariance not positive definite even with jitter {MAX_JITTER}"
                )))
            }
        }
    }
}
