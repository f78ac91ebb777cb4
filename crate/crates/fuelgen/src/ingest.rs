//! Reduction of a mid-story point cloud to a disk-layout observation.
//!
//! The pipeline clips a `x y z` point cloud to a height band and domain,
//! projects to 2D, fits an isotropic Gaussian mixture by EM (with standard
//! deviations clamped to a radius-motivated range and low-weight components
//! pruned), and emits one disk of radius two standard deviations per
//! surviving component.

use rand::Rng;

use crate::domain::{Disk, DiskSet, Domain};
use crate::error::{Error, Result};
use crate::seeding;

/// Default height band for the mid-story clip, meters above ground.
pub const DEFAULT_Z_MIN: f64 = 0.1;
pub const DEFAULT_Z_MAX: f64 = 3.0;

/// Raw scanned points.
#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
}

/// Parse whitespace-delimited `x y z` lines; `#` starts a comment line.
pub fn parse_pointcloud(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 fields `x y z`, found {}", fields.len()),
            });
        }
        let mut p = [0.0; 3];
        for (i, f) in fields.iter().enumerate() {
            p[i] = f.parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad number {f:?}: {e}"),
            })?;
            if !p[i].is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite coordinate {f:?}"),
                });
            }
        }
        points.push(p);
    }
    Ok(PointCloud { points })
}

pub fn load_pointcloud(path: &std::path::Path) -> Result<PointCloud> {
    parse_pointcloud(&std::fs::read_to_string(path)?)
}

/// Retain points with `z` in the closed band and `(x, y)` inside the domain,
/// dropping the height coordinate.
pub fn clip_midstory(
    cloud: &PointCloud,
    z_min: f64,
    z_max: f64,
    domain: &Domain,
) -> Result<Vec<(f64, f64)>> {
    if z_min >= z_max {
        return Err(Error::Parameter(format!(
            "z band is empty: [{z_min}, {z_max}]"
        )));
    }
    Ok(cloud
        .points
        .iter()
        .filter(|p| p[2] >= z_min && p[2] <= z_max && domain.contains(p[0], p[1]))
        .map(|p| (p[0], p[1]))
        .collect())
}

/// One circular mixture component.
#[derive(Debug, Clone, Copy)]
pub struct MixtureComponent {
    pub x: f64,
    pub y: f64,
    /// Isotropic standard deviation, meters.
    pub sd: f64,
    pub weight: f64,
}

/// Mixture-fit settings.
#[derive(Debug, Clone)]
pub struct GmmConfig {
    pub max_components: usize,
    /// Standard deviations are clamped to this range every M-step; acts as
    /// the prior keeping inferred fuel radii in a plausible range.
    pub sd_bounds: (f64, f64),
    /// Components below this weight are pruned after convergence.
    /// Defaults to `1 / (2 * max_components)`.
    pub weight_floor: Option<f64>,
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self {
            max_components: 100,
            sd_bounds: (0.1, 1.5),
            weight_floor: None,
            restarts: 5,
            max_iterations: 200,
        }
    }
}

impl GmmConfig {
    pub fn effective_weight_floor(&self) -> f64 {
        self.weight_floor
            .unwrap_or(1.0 / (2.0 * self.max_components as f64))
    }
}

/// Fit result with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub components: Vec<MixtureComponent>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after every EM iteration of the winning restart.
    pub loglik_trace: Vec<f64>,
}

/// Fit an isotropic Gaussian mixture to 2D points by EM with restarts.
pub fn fit_gmm(points: &[(f64, f64)], config: &GmmConfig, seed: u64) -> Result<GmmFit> {
    if config.max_components == 0 {
        return Err(Error::Parameter("max_components must be positive".into()));
    }
    let (sd_lo, sd_hi) = config.sd_bounds;
    if !(sd_lo > 0.0 && sd_hi >= sd_lo) {
        return Err(Error::Parameter(format!(
            "invalid sd bounds ({sd_lo}, {sd_hi})"
        )));
    }
    if points.len() < 2 * config.max_components {
        return Err(Error::Input(format!(
            "need at least {} points for {} components, got {}",
            2 * config.max_components,
            config.max_components,
            points.len()
        )));
    }

    let mut best: Option<GmmFit> = None;
    for restart in 0..config.restarts.max(1) {
        let fit = em_single(points, config, seeding::derive(seed, restart as u64));
        if best
            .as_ref()
            .map_or(true, |b| fit.log_likelihood > b.log_likelihood)
        {
            best = Some(fit);
        }
    }
    let mut fit = best.expect("at least one restart");

    let floor = config.effective_weight_floor();
    fit.components.retain(|c| c.weight >= floor);
    Ok(fit)
}

fn em_single(points: &[(f64, f64)], config: &GmmConfig, seed: u64) -> GmmFit {
    let n = points.len();
    let k = config.max_components;
    let (sd_lo, sd_hi) = config.sd_bounds;
    let mut rng = seeding::rng(seed);

    // k-means++ style seeding: spread initial centers by squared distance.
    let mut centers: Vec<(f64, f64)> = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)]);
    let mut dist_sq: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(*p, centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dist_sq.iter().sum();
        let next = if total <= 0.0 {
            points[rng.random_range(0..n)]
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in dist_sq.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            points[chosen]
        };
        centers.push(next);
        for (i, p) in points.iter().enumerate() {
            dist_sq[i] = dist_sq[i].min(sq_dist(*p, next));
        }
    }

    let pooled_sd = {
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let v = points
            .iter()
            .map(|p| sq_dist(*p, (mx, my)))
            .sum::<f64>()
            / (2.0 * n as f64);
        v.sqrt()
    };
    let init_sd = pooled_sd.clamp(sd_lo, sd_hi);

    let mut comp: Vec<MixtureComponent> = centers
        .into_iter()
        .map(|(x, y)| MixtureComponent {
            x,
            y,
            sd: init_sd,
            weight: 1.0 / k as f64,
        })
        .collect();

    let mut trace = Vec::new();
    let mut resp = vec![0.0f64; n * k];
    let mut converged = false;
    let mut iterations = 0;
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();

    for iter in 0..config.max_iterations {
        iterations = iter + 1;
        // E-step with log-sum-exp per point
        let mut loglik = 0.0;
        for (i, p) in points.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            let mut max_lp = f64::NEG_INFINITY;
            for (j, c) in comp.iter().enumerate() {
                let var = c.sd * c.sd;
                let lp = if c.weight > 0.0 {
                    c.weight.ln() - sq_dist(*p, (c.x, c.y)) / (2.0 * var) - ln_2pi - var.ln()
                } else {
                    f64::NEG_INFINITY
                };
                row[j] = lp;
                max_lp = max_lp.max(lp);
            }
            let sum_exp: f64 = row.iter().map(|lp| (lp - max_lp).exp()).sum();
            let lse = max_lp + sum_exp.ln();
            loglik += lse;
            for v in row.iter_mut() {
                *v = (*v - lse).exp();
            }
        }
        trace.push(loglik);
        if iter > 0 {
            let prev = trace[iter - 1];
            if (loglik - prev).abs() < 1e-8 * (1.0 + loglik.abs()) {
                converged = true;
                break;
            }
        }

        // M-step with per-step sd clamping
        for (j, c) in comp.iter_mut().enumerate() {
            let mut nk = 0.0;
            let mut sx = 0.0;
            let mut sy = 0.0;
            for (i, p) in points.iter().enumerate() {
                let g = resp[i * k + j];
                nk += g;
                sx += g * p.0;
                sy += g * p.1;
            }
            if nk > 1e-12 {
                c.x = sx / nk;
                c.y = sy / nk;
                let mut ss = 0.0;
                for (i, p) in points.iter().enumerate() {
                    ss += resp[i * k + j] * sq_dist(*p, (c.x, c.y));
                }
                c.sd = (ss / (2.0 * nk)).sqrt().clamp(sd_lo, sd_hi);
            }
            c.weight = nk / n as f64;
        }
    }

    let log_likelihood = *trace.last().unwrap_or(&f64::NEG_INFINITY);
    GmmFit {
        components: comp,
        log_likelihood,
        iterations,
        converged,
        loglik_trace: trace,
    }
}

fn sq_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// Convert mixture components to a disk observation: one disk per component
/// at radius two standard deviations. Components centered outside the domain
/// are dropped; the count of dropped components is returned alongside.
pub fn components_to_disks(
    components: &[MixtureComponent],
    domain: &Domain,
) -> Result<(DiskSet, usize)> {
    let mut disks = Vec::new();
    let mut dropped = 0usize;
    for c in components {
        if domain.contains(c.x, c.y) {
            disks.push(Disk {
                x: c.x,
                y: c.y,
                r: 2.0 * c.sd,
            });
        } else {
            dropped += 1;
        }
    }
    Ok((DiskSet::new(domain.clone(), disks)?, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn domain15() -> Domain {
        Domain::new(0.0, 0.0, 15.0, 15.0, 8).unwrap()
    }

    #[test]
    fn parses_points_and_reports_bad_lines() {
        assert!(parse_pointcloud("").unwrap().points.is_empty());
        let good = "1.0 2.0 0.5\n# comment\n3 4 5\n\n6 7 8\n";
        assert_eq!(parse_pointcloud(good).unwrap().points.len(), 3);
        let bad = "1.0 2.0 0.5\n3 4\n";
        match parse_pointcloud(bad).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn clip_respects_band_and_domain() {
        let cloud = PointCloud {
            points: vec![
                [1.0, 1.0, 5.0],   // above band
                [1.0, 1.0, 0.1],   // boundary: retained
                [1.0, 1.0, 3.0],   // boundary: retained
                [20.0, 1.0, 1.0],  // outside domain
                [2.0, 2.0, 0.05],  // below band
                [3.0, 3.0, 1.5],   // retained
            ],
        };
        let dom = domain15();
        let kept = clip_midstory(&cloud, DEFAULT_Z_MIN, DEFAULT_Z_MAX, &dom).unwrap();
        assert_eq!(kept.len(), 3);

        // brute-force oracle over a pseudo-random cloud
        let mut rng = seeding::rng(8);
        let cloud = PointCloud {
            points: (0..2000)
                .map(|_| {
                    [
                        rng.random::<f64>() * 20.0 - 2.0,
                        rng.random::<f64>() * 20.0 - 2.0,
                        rng.random::<f64>() * 6.0 - 1.0,
                    ]
                })
                .collect(),
        };
        let kept = clip_midstory(&cloud, 0.1, 3.0, &dom).unwrap();
        let oracle = cloud
            .points
            .iter()
            .filter(|p| p[2] >= 0.1 && p[2] <= 3.0)
            .filter(|p| p[0] >= 0.0 && p[0] <= 15.0 && p[1] >= 0.0 && p[1] <= 15.0)
            .count();
        assert_eq!(kept.len(), oracle);

        let all_high = PointCloud {
            points: vec![[1.0, 1.0, 5.0], [2.0, 2.0, 5.0]],
        };
        assert!(clip_midstory(&all_high, 0.1, 3.0, &dom).unwrap().is_empty());
    }

    fn gaussian_cluster(
        center: (f64, f64),
        sd: f64,
        n: usize,
        rng: &mut impl Rng,
    ) -> Vec<(f64, f64)> {
        let norm = Normal::new(0.0, sd).unwrap();
        (0..n)
            .map(|_| (center.0 + norm.sample(rng), center.1 + norm.sample(rng)))
            .collect()
    }

    #[test]
    fn single_tight_cluster_survives_pruning_alone() {
        let mut rng = seeding::rng(3);
        let pts = gaussian_cluster((7.0, 8.0), 0.2, 400, &mut rng);
        let cfg = GmmConfig {
            max_components: 5,
            weight_floor: Some(0.02),
            ..GmmConfig::default()
        };
        let fit = fit_gmm(&pts, &cfg, 1).unwrap();
        assert_eq!(fit.components.len(), 1, "components: {:?}", fit.components);
        let c = fit.components[0];
        assert!((c.x - 7.0).abs() < 0.05 && (c.y - 8.0).abs() < 0.05);
    }

    #[test]
    fn five_separated_clusters_recovered() {
        let mut rng = seeding::rng(12);
        let centers = [(2.0, 2.0), (12.0, 2.5), (7.5, 7.5), (2.5, 12.0), (12.5, 12.5)];
        let sd = 0.3;
        let mut pts = Vec::new();
        for c in centers {
            pts.extend(gaussian_cluster(c, sd, 500, &mut rng));
        }
        let cfg = GmmConfig {
            max_components: 10,
            ..GmmConfig::default()
        };
        let fit = fit_gmm(&pts, &cfg, 7).unwrap();
        assert_eq!(fit.components.len(), 5, "components: {:?}", fit.components);
        for c in centers {
            let nearest = fit
                .components
                .iter()
                .map(|m| sq_dist((m.x, m.y), c).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 0.1, "cluster {c:?} off by {nearest}");
        }
        for m in &fit.components {
            assert!(
                (m.sd - sd).abs() < 0.2 * sd,
                "sd {} vs {sd} at ({}, {})",
                m.sd,
                m.x,
                m.y
            );
        }
    }

    #[test]
    fn weights_sum_to_one_without_pruning() {
        let mut rng = seeding::rng(21);
        let mut pts = gaussian_cluster((4.0, 4.0), 0.5, 300, &mut rng);
        pts.extend(gaussian_cluster((10.0, 10.0), 0.4, 300, &mut rng));
        let cfg = GmmConfig {
            max_components: 4,
            weight_floor: Some(0.0),
            ..GmmConfig::default()
        };
        let fit = fit_gmm(&pts, &cfg, 5).unwrap();
        let total: f64 = fit.components.iter().map(|c| c.weight).sum();
        assert!((total - 1.0).abs() < 1e-8, "weights sum to {total}");
    }

    #[test]
    fn loglik_is_monotone_within_tolerance() {
        let mut rng = seeding::rng(30);
        let mut pts = gaussian_cluster((5.0, 5.0), 0.6, 250, &mut rng);
        pts.extend(gaussian_cluster((10.0, 6.0), 0.3, 250, &mut rng));
        let cfg = GmmConfig {
            max_components: 6,
            ..GmmConfig::default()
        };
        let fit = fit_gmm(&pts, &cfg, 2).unwrap();
        for pair in fit.loglik_trace.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-9,
                "log-likelihood decreased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn fit_is_deterministic_and_bounded() {
        let mut rng = seeding::rng(44);
        let pts = gaussian_cluster((6.0, 6.0), 1.0, 260, &mut rng);
        let cfg = GmmConfig {
            max_components: 8,
            sd_bounds: (0.25, 0.9),
            ..GmmConfig::default()
        };
        let a = fit_gmm(&pts, &cfg, 9).unwrap();
        let b = fit_gmm(&pts, &cfg, 9).unwrap();
        assert_eq!(a.components.len(), b.components.len());
        for (x, y) in a.components.iter().zip(&b.components) {
            assert_eq!(x.x, y.x);
            assert_eq!(x.sd, y.sd);
        }
        for c in &a.components {
            assert!(c.sd >= 0.25 && c.sd <= 0.9);
        }
    }

    #[test]
    fn too_few_points_is_an_input_error() {
        let pts = vec![(1.0, 1.0); 5];
        let cfg = GmmConfig {
            max_components: 5,
            ..GmmConfig::default()
        };
        assert!(matches!(fit_gmm(&pts, &cfg, 0), Err(Error::Input(_))));
    }

    #[test]
    fn components_become_double_sd_disks() {
        let comps = vec![
            MixtureComponent { x: 3.0, y: 4.0, sd: 0.5, weight: 0.6 },
            MixtureComponent { x: 99.0, y: 4.0, sd: 0.3, weight: 0.4 },
        ];
        let (set, dropped) = components_to_disks(&comps, &domain15()).unwrap();
        assert_eq!(set.disks.len(), 1);
        assert_eq!(dropped, 1);
        assert_eq!(set.disks[0].r, 1.0);

        let (empty, none_dropped) = components_to_disks(&[], &domain15()).unwrap();
        assert!(empty.is_empty());
        assert_eq!(none_dropped, 0);
    }
}
