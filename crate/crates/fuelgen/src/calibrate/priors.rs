//! Prior distributions over the four model parameters.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::domain::{Domain, Theta};

/// Parameter order used throughout calibration output.
pub const PARAM_NAMES: [&str; 4] = ["rho", "lambda", "mu", "sigma"];

/// Prior specification:
/// - lengthscale `rho`: Uniform(a, b), bounds tied to the domain size
/// - density `lambda`: Uniform(0, lambda_max)
/// - radius mean `mu`: Normal(1.5, 0.5^2) truncated to [0, 3]
/// - radius variance `sigma^2`: Gamma(shape 1, rate 0.001), peaked near zero;
///   evaluated on `sigma` with the change-of-variables Jacobian included
#[derive(Debug, Clone)]
pub struct PriorSpec {
    pub rho_bounds: (f64, f64),
    pub lambda_max: f64,
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub mu_bounds: (f64, f64),
    pub sigma_sq_shape: f64,
    pub sigma_sq_rate: f64,
}

impl PriorSpec {
    /// Defaults scaled to a domain, optionally informed by the empirical
    /// density estimate: `lambda ~ U(0, max(4 * lambda_hat, 1))` when an
    /// estimate exists, `U(0, 10)` otherwise.
    pub fn default_for(domain: &Domain, lambda_hat: Option<f64>) -> Self {
        let extent = domain.width().max(domain.height());
        let lambda_max = match lambda_hat {
            Some(l) if l > 0.0 => (4.0 * l).max(1.0),
            _ => 10.0,
        };
        Self {
            rho_bounds: (extent / 30.0, extent * 2.0 / 3.0),
            lambda_max,
            mu_mean: 1.5,
            mu_sd: 0.5,
            mu_bounds: (0.0, 3.0),
            sigma_sq_shape: 1.0,
            sigma_sq_rate: 0.001,
        }
    }

    /// Joint log prior density at `theta`; negative infinity outside support.
    pub fn log_pdf(&self, theta: &Theta) -> f64 {
        self.rho_log_pdf(theta.rho)
            + self.lambda_log_pdf(theta.lambda)
            + self.mu_log_pdf(theta.mu)
            + self.sigma_log_pdf(theta.sigma)
    }

    pub fn rho_log_pdf(&self, rho: f64) -> f64 {
        let (a, b) = self.rho_bounds;
        if rho >= a && rho <= b {
            -(b - a).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn lambda_log_pdf(&self, lambda: f64) -> f64 {
        if lambda > 0.0 && lambda <= self.lambda_max {
            -self.lambda_max.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn mu_log_pdf(&self, mu: f64) -> f64 {
        let (lo, hi) = self.mu_bounds;
        if mu < lo || mu > hi {
            return f64::NEG_INFINITY;
        }
        let std = Normal::standard();
        let z = (mu - self.mu_mean) / self.mu_sd;
        let norm = std.cdf((hi - self.mu_mean) / self.mu_sd)
            - std.cdf((lo - self.mu_mean) / self.mu_sd);
        -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln() - self.mu_sd.ln() - norm.ln()
    }

    /// Log density over `sigma`: Gamma on `sigma^2` plus the `2 sigma`
    /// Jacobian of the square transform.
    pub fn sigma_log_pdf(&self, sigma: f64) -> f64 {
        if !(sigma > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.gamma_sigma_sq_log_pdf(sigma * sigma) + (2.0 * sigma).ln()
    }

    /// The Gamma(shape, rate) log density evaluated at `sigma^2` alone.
    pub fn gamma_sigma_sq_log_pdf(&self, sigma_sq: f64) -> f64 {
        if !(sigma_sq > 0.0) {
            return f64::NEG_INFINITY;
        }
        let (k, r) = (self.sigma_sq_shape, self.sigma_sq_rate);
        k * r.ln() - ln_gamma(k) + (k - 1.0) * sigma_sq.ln() - r * sigma_sq
    }

    /// 95% equal-tail prior interval per parameter, in the order
    /// rho, lambda, mu, sigma.
    pub fn interval95(&self, param: usize) -> (f64, f64) {
        match param {
            0 => {
                let (a, b) = self.rho_bounds;
                (a + 0.025 * (b - a), b - 0.025 * (b - a))
            }
            1 => (0.025 * self.lambda_max, 0.975 * self.lambda_max),
            2 => (self.mu_quantile(0.025), self.mu_quantile(0.975)),
            3 => (self.sigma_quantile(0.025), self.sigma_quantile(0.975)),
            _ => panic!("parameter index {param} out of range"),
        }
    }

    fn mu_quantile(&self, p: f64) -> f64 {
        let std = Normal::standard();
        let (lo, hi) = self.mu_bounds;
        let alpha = std.cdf((lo - self.mu_mean) / self.mu_sd);
        let beta = std.cdf((hi - self.mu_mean) / self.mu_sd);
        self.mu_mean + self.mu_sd * std.inverse_cdf(alpha + p * (beta - alpha))
    }

    fn sigma_quantile(&self, p: f64) -> f64 {
        use statrs::distribution::Gamma;
        let g = Gamma::new(self.sigma_sq_shape, self.sigma_sq_rate)
            .expect("valid gamma parameters");
        g.inverse_cdf(p).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use approx::assert_relative_eq;

    fn priors() -> PriorSpec {
        let dom = Domain::new(0.0, 0.0, 15.0, 15.0, 8).unwrap();
        PriorSpec::default_for(&dom, Some(2.0))
    }

    #[test]
    fn defaults_scale_with_domain_and_estimate() {
        let p = priors();
        assert_relative_eq!(p.rho_bounds.0, 0.5);
        assert_relative_eq!(p.rho_bounds.1, 10.0);
        assert_relative_eq!(p.lambda_max, 8.0);
        let dom = Domain::new(0.0, 0.0, 15.0, 15.0, 8).unwrap();
        assert_relative_eq!(PriorSpec::default_for(&dom, None).lambda_max, 10.0);
    }

    #[test]
    fn mu_outside_truncation_is_impossible() {
        let p = priors();
        let theta = Theta {
            rho: 3.0,
            lambda: 2.0,
            mu: 3.5,
            sigma: 0.2,
        };
        assert_eq!(p.log_pdf(&theta), f64::NEG_INFINITY);
    }

    #[test]
    fn rho_component_is_flat_inside_support() {
        let p = priors();
        let (a, b) = p.rho_bounds;
        let mid = 0.5 * (a + b);
        assert_relative_eq!(p.rho_log_pdf(mid), -(b - a).ln());
        assert_eq!(p.rho_log_pdf(b + 0.1), f64::NEG_INFINITY);
    }

    #[test]
    fn gamma_component_matches_exponential_form() {
        // Gamma(1, rate) is Exponential(rate): log pdf at x is ln(rate) - rate x
        let p = priors();
        assert_relative_eq!(
            p.gamma_sigma_sq_log_pdf(1.0),
            (0.001f64).ln() - 0.001,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sigma_density_includes_jacobian() {
        let p = priors();
        let sigma = 0.7;
        let expected = p.gamma_sigma_sq_log_pdf(sigma * sigma) + (2.0 * sigma).ln();
        assert_relative_eq!(p.sigma_log_pdf(sigma), expected, epsilon = 1e-12);
    }

    #[test]
    fn intervals_cover_95_percent() {
        let p = priors();
        let (lo, hi) = p.interval95(0);
        assert_relative_eq!(hi - lo, 0.95 * 9.5, epsilon = 1e-10);
        let (lo, hi) = p.interval95(2);
        assert!(lo > 0.0 && hi < 3.0 && lo < hi);
        // sigma^2 ~ Exp(0.001): quantiles -ln(1-p)/rate
        let (lo, hi) = p.interval95(3);
        assert_relative_eq!(lo, (-(0.975f64).ln() / 0.001).sqrt(), epsilon = 1e-6);
        assert_relative_eq!(hi, (-(0.025f64).ln() / 0.001).sqrt(), epsilon = 1e-6);
    }
}
