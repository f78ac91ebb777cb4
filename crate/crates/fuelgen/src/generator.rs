//! Stochastic disk-layout generation from model parameters.
//!
//! A realization composes: field sample -> logistic transform -> Poisson
//! count -> acceptance sampling of candidate centers -> truncated-normal
//! radii. Every stage draws from a substream derived from the realization
//! seed, so layouts are reproducible independent of worker count.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::domain::{Disk, DiskSet, Domain, Theta};
use crate::error::{Error, Result};
use crate::gp::{FieldPredictor, FieldSampler, logistic, CovariateStack, DEFAULT_JITTER};
use crate::seeding;

/// Proposal budget per requested point before acceptance sampling aborts.
pub const CANDIDATE_BUDGET_PER_POINT: u64 = 1_000_000;

/// Relative intensity surface consulted during acceptance sampling.
pub trait OmegaField {
    /// Acceptance probability at a point; must lie in (0, 1].
    fn omega_at(&self, x: f64, y: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64> OmegaField for F {
    fn omega_at(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

/// Production intensity: kriged field prediction pushed through the logistic
/// with optional covariate terms.
pub struct KrigedOmega<'a> {
    pub predictor: FieldPredictor,
    pub covariates: &'a CovariateStack,
}

impl OmegaField for KrigedOmega<'_> {
    fn omega_at(&self, x: f64, y: f64) -> f64 {
        let w = self.predictor.predict(x, y);
        logistic(self.covariates.linear_predictor(w, x, y))
    }
}

/// Draw the total point count `n ~ Pois(lambda * A_D)`.
pub fn sample_count(lambda: f64, domain: &Domain, seed: u64) -> Result<usize> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::Parameter(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    let mean = lambda * domain.area();
    let pois = Poisson::new(mean)
        .map_err(|e| Error::Parameter(format!("invalid Poisson mean {mean}: {e}")))?;
    let mut rng = seeding::rng(seed);
    Ok(pois.sample(&mut rng) as usize)
}

/// Accept exactly `n` candidate points drawn uniformly on the domain, each
/// retained with probability `omega` at its location.
///
/// Candidate `k` draws from substream `k` of `seed`, so the accepted set is
/// the same for any evaluation order or worker count.
pub fn place_points(
    domain: &Domain,
    omega: &impl OmegaField,
    n: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut points = Vec::with_capacity(n);
    if n == 0 {
        return Ok(points);
    }
    let budget = CANDIDATE_BUDGET_PER_POINT.saturating_mul(n as u64);
    let base = seeding::rng(seed);
    let mut k: u64 = 0;
    while points.len() < n {
        if k >= budget {
            return Err(Error::GenerationStall {
                requested: n,
                accepted: points.len(),
                candidates: k,
                rate: points.len() as f64 / k as f64,
            });
        }
        let mut rng = base.clone();
        rng.set_stream(k);
        let x = domain.x_min + rng.random::<f64>() * domain.width();
        let y = domain.y_min + rng.random::<f64>() * domain.height();
        let u: f64 = rng.random();
        if u < omega.omega_at(x, y) {
            points.push((x, y));
        }
        k += 1;
    }
    Ok(points)
}

/// Draw `n` radii from the truncated normal `N+(mu, sigma^2)` bounded below
/// by zero, by rejection against the untruncated normal.
pub fn sample_radii(mu: f64, sigma: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Parameter(format!("mu must be positive, got {mu}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let normal = Normal::new(mu, sigma)
        .map_err(|e| Error::Parameter(format!("invalid radius distribution: {e}")))?;
    let mut rng = seeding::rng(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        // mu > 0 puts the acceptance probability above one half
        let r = loop {
            let v = normal.sample(&mut rng);
            if v > 0.0 {
                break v;
            }
        };
        out.push(r);
    }
    Ok(out)
}

/// Generate a complete disk-layout realization from parameters.
pub fn generate_realization(
    theta: &Theta,
    domain: &Domain,
    covariates: Option<&CovariateStack>,
    seed: u64,
) -> Result<DiskSet> {
    theta.validate()?;
    let sampler = FieldSampler::new(domain, theta.rho, DEFAULT_JITTER)?;
    generate_with_sampler(&sampler, theta, covariates, seed)
}

/// Generate a realization reusing an existing field sampler.
///
/// The sampler's lengthscale must match `theta.rho`; sharing one sampler
/// across the realizations of a likelihood evaluation avoids re-factoring
/// the covariance per draw.
pub fn generate_with_sampler(
    sampler: &FieldSampler,
    theta: &Theta,
    covariates: Option<&CovariateStack>,
    seed: u64,
) -> Result<DiskSet> {
    theta.validate()?;
    if (sampler.rho() - theta.rho).abs() > 1e-12 {
        return Err(Error::Input(format!(
            "sampler lengthscale {} does not match theta.rho {}",
            sampler.rho(),
            theta.rho
        )));
    }
    let domain = sampler.domain().clone();
    let identity = CovariateStack::identity();
    let stack = match covariates {
        Some(s) => {
            s.validate_against(&domain)?;
            s
        }
        None => &identity,
    };

    let n = sample_count(theta.lambda, &domain, seeding::derive(seed, 1))?;
    let mut disks = Vec::with_capacity(n);
    if n > 0 {
        let field = sampler.sample(seeding::derive(seed, 0));
        let predictor = sampler.conditioner(&field)?;
        let omega = KrigedOmega {
            predictor,
            covariates: stack,
        };
        let centers = place_points(&domain, &omega, n, seeding::derive(seed, 2))?;
        let radii = sample_radii(theta.mu, theta.sigma, n, seeding::derive(seed, 3))?;
        disks.extend(
            centers
                .into_iter()
                .zip(radii)
                .map(|((x, y), r)| Disk { x, y, r }),
        );
    }
    let mut set = DiskSet::new(domain, disks)?;
    set.seed = Some(seed);
    set.theta = Some(*theta);
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn domain15() -> Domain {
        Domain::new(0.0, 0.0, 15.0, 15.0, 32).unwrap()
    }

    #[test]
    fn zero_lambda_yields_zero_count() {
        let dom = domain15();
        for seed in 0..20 {
            assert_eq!(sample_count(0.0, &dom, seed).unwrap(), 0);
        }
    }

    #[test]
    fn count_moments_match_poisson() {
        let dom = domain15();
        let mean_target = 2.0 * dom.area(); // 450
        let n_draws = 10_000;
        let draws: Vec<f64> = (0..n_draws)
            .map(|s| sample_count(2.0, &dom, s as u64).unwrap() as f64)
            .collect();
        let m = stats::mean(&draws);
        let v = stats::sample_variance(&draws);
        let se = (mean_target / n_draws as f64).sqrt();
        assert!(
            (m - mean_target).abs() < 3.0 * se,
            "mean {m} vs {mean_target} (3se {})",
            3.0 * se
        );
        assert!(
            (v - mean_target).abs() < 0.1 * mean_target,
            "variance {v} vs {mean_target}"
        );
    }

    #[test]
    fn negative_lambda_rejected() {
        assert!(sample_count(-1.0, &domain15(), 0).is_err());
    }

    #[test]
    fn constant_omega_thinning_preserves_uniformity() {
        let dom = domain15();
        let pts = place_points(&dom, &|_x: f64, _y: f64| 0.5, 5000, 31).unwrap();
        assert_eq!(pts.len(), 5000);
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let unif = |v: f64| (v / 15.0).clamp(0.0, 1.0);
        let (_, px) = stats::ks_test(&xs, unif);
        let (_, py) = stats::ks_test(&ys, unif);
        assert!(px > 0.01, "x marginal KS p = {px}");
        assert!(py > 0.01, "y marginal KS p = {py}");
    }

    #[test]
    fn full_omega_accepts_first_candidates() {
        let dom = domain15();
        let n = 100;
        let pts = place_points(&dom, &|_x: f64, _y: f64| 1.0, n, 17).unwrap();
        assert_eq!(pts.len(), n);
        // acceptance rate 1 means candidate k produced point k
        let replay = place_points(&dom, &|_x: f64, _y: f64| 1.0, n / 2, 17).unwrap();
        assert_eq!(&pts[..n / 2], &replay[..]);
    }

    #[test]
    fn step_field_splits_points_nine_to_one() {
        let dom = domain15();
        let omega = |x: f64, _y: f64| if x < 7.5 { 0.9 } else { 0.1 };
        let n = 10_000;
        let pts = place_points(&dom, &omega, n, 5).unwrap();
        let left = pts.iter().filter(|p| p.0 < 7.5).count() as f64;
        let p = 0.9;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let frac = left / n as f64;
        assert!(
            (frac - p).abs() < 3.0 * se,
            "left fraction {frac} vs {p} (3se {})",
            3.0 * se
        );
    }

    #[test]
    fn near_zero_omega_stalls_with_diagnostics() {
        let dom = Domain::new(0.0, 0.0, 1.0, 1.0, 4).unwrap();
        let err = place_points(&dom, &|_x: f64, _y: f64| 0.0, 1, 3).unwrap_err();
        match err {
            Error::GenerationStall {
                requested,
                accepted,
                candidates,
                rate,
            } => {
                assert_eq!(requested, 1);
                assert_eq!(accepted, 0);
                assert_eq!(candidates, CANDIDATE_BUDGET_PER_POINT);
                assert_eq!(rate, 0.0);
            }
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn radii_all_positive_and_degenerate_width_collapses() {
        let radii = sample_radii(1.5, 1e-6, 1000, 9).unwrap();
        for r in &radii {
            assert!(*r > 0.0);
            assert!((r - 1.5).abs() < 1e-5);
        }
        assert!(sample_radii(1.0, 0.0, 10, 0).is_err());
        assert!(sample_radii(0.0, 1.0, 10, 0).is_err());
    }

    #[test]
    fn radii_mean_matches_truncated_normal_oracle() {
        // E[N+(mu, sigma^2)] = mu + sigma * phi(-mu/sigma) / (1 - Phi(-mu/sigma))
        use statrs::distribution::{Continuous, ContinuousCDF, Normal};
        let (mu, sigma) = (0.5, 0.5);
        let std = Normal::standard();
        let a = -mu / sigma;
        let expected = mu + sigma * std.pdf(a) / (1.0 - std.cdf(a));
        assert!((expected - 0.6441).abs() < 1e-4);
        let draws = sample_radii(mu, sigma, 100_000, 123).unwrap();
        let m = stats::mean(&draws);
        assert!(
            (m - expected).abs() < 0.01 * expected,
            "mean {m} vs oracle {expected}"
        );
    }

    #[test]
    fn zero_lambda_realization_is_empty() {
        let theta = Theta {
            rho: 3.0,
            lambda: 0.0,
            mu: 0.5,
            sigma: 0.2,
        };
        // lambda = 0 is allowed at generation time even though Theta::new
        // would reject it for calibration
        let dom = domain15();
        let sampler = FieldSampler::new(&dom, theta.rho, DEFAULT_JITTER).unwrap();
        let n = sample_count(theta.lambda, &dom, 1).unwrap();
        assert_eq!(n, 0);
        let _ = sampler;
    }

    #[test]
    fn realizations_are_seed_deterministic() {
        let theta = Theta::new(3.0, 0.5, 0.5, 0.2).unwrap();
        let dom = domain15();
        let a = generate_realization(&theta, &dom, None, 77).unwrap();
        let b = generate_realization(&theta, &dom, None, 77).unwrap();
        assert_eq!(a.disks.len(), b.disks.len());
        for (x, y) in a.disks.iter().zip(&b.disks) {
            assert_eq!(x, y);
        }
        let c = generate_realization(&theta, &dom, None, 78).unwrap();
        assert!(a.disks.len() != c.disks.len() || a.disks.iter().zip(&c.disks).any(|(p, q)| p != q));
    }

    #[test]
    fn realization_moments_match_component_oracles() {
        use statrs::distribution::{Continuous, ContinuousCDF, Normal};
        let theta = Theta::new(2.0, 1.0, 0.6, 0.3).unwrap();
        let dom = Domain::new(0.0, 0.0, 8.0, 8.0, 32).unwrap();
        let sampler = FieldSampler::new(&dom, theta.rho, DEFAULT_JITTER).unwrap();
        let n_real = 200;
        let mut counts = Vec::with_capacity(n_real);
        let mut radii = Vec::new();
        for s in 0..n_real {
            let ds = generate_with_sampler(&sampler, &theta, None, s as u64).unwrap();
            counts.push(ds.disks.len() as f64);
            radii.extend(ds.disks.iter().map(|d| d.r));
        }
        let count_target = theta.lambda * dom.area();
        let count_mean = stats::mean(&counts);
        let count_se = (count_target / n_real as f64).sqrt();
        assert!(
            (count_mean - count_target).abs() < 3.0 * count_se,
            "count mean {count_mean} vs {count_target}"
        );

        let std = Normal::standard();
        let a = -theta.mu / theta.sigma;
        let radius_target = theta.mu + theta.sigma * std.pdf(a) / (1.0 - std.cdf(a));
        let radius_mean = stats::mean(&radii);
        let radius_var = stats::sample_variance(&radii);
        let radius_se = (radius_var / radii.len() as f64).sqrt();
        assert!(
            (radius_mean - radius_target).abs() < 3.0 * radius_se,
            "radius mean {radius_mean} vs {radius_target}"
        );
    }
}
