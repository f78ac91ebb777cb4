//! Disk-side metric computations: Monte Carlo area, circumference-point
//! perimeter, intersection-graph components, and rasterized hole counts.

use rand::Rng;

use crate::domain::{Disk, DiskSet};
use crate::error::{Error, Result};
use crate::raster::{raster_metrics, rasterize};
use crate::seeding;
use crate::unionfind::UnionFind;

/// Uniform-grid spatial index over disk centers for coverage queries.
pub(crate) struct DiskIndex<'a> {
    disks: &'a [Disk],
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<u32>>,
    max_r: f64,
}

impl<'a> DiskIndex<'a> {
    pub fn new(set: &'a DiskSet) -> Self {
        let disks = &set.disks[..];
        let max_r = disks.iter().map(|d| d.r).fold(0.0f64, f64::max);
        let extent = set.domain.width().max(set.domain.height());
        // cell at least the max radius keeps the query neighborhood at 3x3
        let cell = max_r.max(extent / 64.0).max(1e-12);
        let nx = ((set.domain.width() / cell).ceil() as usize).max(1);
        let ny = ((set.domain.height() / cell).ceil() as usize).max(1);
        let mut bins = vec![Vec::new(); nx * ny];
        let x0 = set.domain.x_min;
        let y0 = set.domain.y_min;
        for (i, d) in disks.iter().enumerate() {
            let bx = (((d.x - x0) / cell) as usize).min(nx - 1);
            let by = (((d.y - y0) / cell) as usize).min(ny - 1);
            bins[by * nx + bx].push(i as u32);
        }
        Self {
            disks,
            x0,
            y0,
            cell,
            nx,
            ny,
            bins,
            max_r,
        }
    }

    /// Visit every disk whose center lies within `radius` of `(x, y)`,
    /// plus near misses sharing the same bins.
    fn for_each_near(&self, x: f64, y: f64, radius: f64, mut f: impl FnMut(u32, &Disk) -> bool) {
        let reach = (radius / self.cell).ceil() as isize;
        let bx = ((x - self.x0) / self.cell).floor() as isize;
        let by = ((y - self.y0) / self.cell).floor() as isize;
        for gy in (by - reach).max(0)..=(by + reach).min(self.ny as isize - 1) {
            for gx in (bx - reach).max(0)..=(bx + reach).min(self.nx as isize - 1) {
                for &i in &self.bins[gy as usize * self.nx + gx as usize] {
                    if !f(i, &self.disks[i as usize]) {
                        return;
                    }
                }
            }
        }
    }

    /// Whether any disk covers the point (closed disks).
    pub fn covered(&self, x: f64, y: f64) -> bool {
        let mut hit = false;
        self.for_each_near(x, y, self.max_r, |_, d| {
            let dx = x - d.x;
            let dy = y - d.y;
            if dx * dx + dy * dy <= d.r * d.r {
                hit = true;
                false
            } else {
                true
            }
        });
        hit
    }

    /// Whether the point lies strictly inside any disk other than `skip`.
    pub fn strictly_inside_other(&self, x: f64, y: f64, skip: u32) -> bool {
        let mut hit = false;
        self.for_each_near(x, y, self.max_r, |i, d| {
            if i != skip {
                let dx = x - d.x;
                let dy = y - d.y;
                if dx * dx + dy * dy < d.r * d.r {
                    hit = true;
                    return false;
                }
            }
            true
        });
        hit
    }
}

/// Monte Carlo estimate of the union area as a proportion of the domain area.
pub fn disk_area_mc(disks: &DiskSet, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples < 1000 {
        return Err(Error::Parameter(format!(
            "area estimation needs at least 1000 samples, got {n_samples}"
        )));
    }
    if disks.is_empty() {
        return Ok(0.0);
    }
    let index = DiskIndex::new(disks);
    let mut rng = seeding::rng(seed);
    let dom = &disks.domain;
    let mut covered = 0usize;
    for _ in 0..n_samples {
        let x = dom.x_min + rng.random::<f64>() * dom.width();
        let y = dom.y_min + rng.random::<f64>() * dom.height();
        if index.covered(x, y) {
            covered += 1;
        }
    }
    Ok(covered as f64 / n_samples as f64)
}

/// Perimeter of the union boundary, in meters.
///
/// Places `points_per_disk` points on each circumference, discards points
/// strictly inside any other disk, and returns the retained proportion times
/// the total analytic circumference.
pub fn disk_perimeter(disks: &DiskSet, points_per_disk: usize) -> Result<f64> {
    if points_per_disk < 64 {
        return Err(Error::Parameter(format!(
            "perimeter estimation needs at least 64 points per disk, got {points_per_disk}"
        )));
    }
    if disks.is_empty() {
        return Ok(0.0);
    }
    let index = DiskIndex::new(disks);
    let total_points = disks.len() * points_per_disk;
    let mut retained = 0usize;
    let step = std::f64::consts::TAU / points_per_disk as f64;
    for (i, d) in disks.disks.iter().enumerate() {
        for k in 0..points_per_disk {
            let a = step * k as f64;
            let px = d.x + d.r * a.cos();
            let py = d.y + d.r * a.sin();
            if !index.strictly_inside_other(px, py, i as u32) {
                retained += 1;
            }
        }
    }
    let total_circumference: f64 = disks.disks.iter().map(|d| std::f64::consts::TAU * d.r).sum();
    Ok(retained as f64 / total_points as f64 * total_circumference)
}

/// Number of connected components of the disk-intersection graph.
///
/// Disks `i` and `j` are connected when `d(s_i, s_j) <= r_i + r_j`.
pub fn disk_ncc(disks: &DiskSet) -> usize {
    let n = disks.len();
    if n == 0 {
        return 0;
    }
    let index = DiskIndex::new(disks);
    let mut uf = UnionFind::new(n);
    for (i, d) in disks.disks.iter().enumerate() {
        index.for_each_near(d.x, d.y, d.r + index.max_r, |j, other| {
            if (j as usize) > i {
                let dx = d.x - other.x;
                let dy = d.y - other.y;
                let reach = d.r + other.r;
                if dx * dx + dy * dy <= reach * reach {
                    uf.union(i as u32, j);
                }
            }
            true
        });
    }
    uf.count_roots(0..n as u32)
}

/// Number of holes in the union, via fine rasterization.
pub fn disk_holes(disks: &DiskSet, pixel_size: f64) -> Result<usize> {
    if disks.is_empty() {
        return Ok(0);
    }
    let raster = rasterize(disks, pixel_size)?;
    Ok(raster_metrics(&raster)?.holes)
}

/// Whether `pixel_size` resolves the smallest disk (at most min radius / 4).
pub fn holes_resolution_adequate(disks: &DiskSet, pixel_size: f64) -> bool {
    match disks
        .disks
        .iter()
        .map(|d| d.r)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
    {
        Some(min_r) => pixel_size <= min_r / 4.0,
        None => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;

    fn domain(side: f64) -> Domain {
        Domain::new(0.0, 0.0, side, side, 8).unwrap()
    }

    fn set(side: f64, disks: Vec<Disk>) -> DiskSet {
        DiskSet::new(domain(side), disks).unwrap()
    }

    /// Union area of two equal circles separated by `d`: 2 pi r^2 - lens.
    fn two_circle_union_area(r: f64, d: f64) -> f64 {
        let lens = 2.0 * r * r * (d / (2.0 * r)).acos()
            - 0.5 * d * (4.0 * r * r - d * d).sqrt();
        2.0 * std::f64::consts::PI * r * r - lens
    }

    #[test]
    fn area_of_empty_set_is_zero() {
        assert_eq!(disk_area_mc(&set(10.0, vec![]), 1000, 0).unwrap(), 0.0);
    }

    #[test]
    fn area_requires_enough_samples() {
        assert!(disk_area_mc(&set(10.0, vec![]), 999, 0).is_err());
    }

    #[test]
    fn two_overlapping_unit_disks_match_lens_oracle() {
        let ds = set(
            10.0,
            vec![
                Disk { x: 4.5, y: 5.0, r: 1.0 },
                Disk { x: 5.5, y: 5.0, r: 1.0 },
            ],
        );
        let expected = two_circle_union_area(1.0, 1.0);
        assert!((expected - 5.0548).abs() < 1e-4, "oracle {expected}");
        let prop = disk_area_mc(&ds, 1_000_000, 42).unwrap();
        let expected_prop = expected / 100.0;
        assert!(
            (prop - expected_prop).abs() < 0.01 * expected_prop,
            "proportion {prop} vs {expected_prop}"
        );
    }

    #[test]
    fn covering_disk_gives_area_one() {
        let ds = set(2.0, vec![Disk { x: 1.0, y: 1.0, r: 5.0 }]);
        assert_eq!(disk_area_mc(&ds, 2000, 7).unwrap(), 1.0);
    }

    #[test]
    fn lone_disk_perimeter_is_exact() {
        let ds = set(10.0, vec![Disk { x: 5.0, y: 5.0, r: 1.0 }]);
        let p = disk_perimeter(&ds, 512).unwrap();
        let expected = std::f64::consts::TAU;
        assert!(
            (p - expected).abs() < 0.01 * expected,
            "perimeter {p} vs {expected}"
        );
    }

    #[test]
    fn disjoint_disks_sum_their_circumferences() {
        let ds = set(
            20.0,
            vec![
                Disk { x: 5.0, y: 5.0, r: 1.0 },
                Disk { x: 15.0, y: 15.0, r: 1.0 },
            ],
        );
        let p = disk_perimeter(&ds, 256).unwrap();
        assert!((p - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn overlapping_pair_hides_arcs() {
        // centers 1 m apart, unit radii: each disk hides a 2 pi / 3 arc,
        // leaving 8 pi / 3 in total
        let ds = set(
            10.0,
            vec![
                Disk { x: 4.5, y: 5.0, r: 1.0 },
                Disk { x: 5.5, y: 5.0, r: 1.0 },
            ],
        );
        let p = disk_perimeter(&ds, 512).unwrap();
        let expected = 8.0 * std::f64::consts::PI / 3.0;
        assert!(
            (p - expected).abs() < 0.02 * expected,
            "perimeter {p} vs {expected}"
        );
    }

    #[test]
    fn ncc_threshold_is_sum_of_radii() {
        let near = set(
            10.0,
            vec![
                Disk { x: 4.0, y: 5.0, r: 1.0 },
                Disk { x: 5.9, y: 5.0, r: 1.0 },
            ],
        );
        assert_eq!(disk_ncc(&near), 1);
        let far = set(
            10.0,
            vec![
                Disk { x: 4.0, y: 5.0, r: 1.0 },
                Disk { x: 6.1, y: 5.0, r: 1.0 },
            ],
        );
        assert_eq!(disk_ncc(&far), 2);
        assert_eq!(disk_ncc(&set(10.0, vec![])), 0);
    }

    #[test]
    fn chain_of_disks_is_one_component() {
        let disks: Vec<Disk> = (0..5)
            .map(|i| Disk { x: 1.0 + 1.9 * i as f64, y: 5.0, r: 1.0 })
            .collect();
        let ds = set(10.0, disks);
        assert_eq!(disk_ncc(&ds), 1);
    }

    #[test]
    fn triangle_of_disks_hole_count_depends_on_side() {
        // equilateral triangle of unit disks: circumradius s / sqrt(3)
        let triangle = |s: f64| {
            let h = s * 3.0f64.sqrt() / 2.0;
            set(
                10.0,
                vec![
                    Disk { x: 5.0 - s / 2.0, y: 4.0, r: 1.0 },
                    Disk { x: 5.0 + s / 2.0, y: 4.0, r: 1.0 },
                    Disk { x: 5.0, y: 4.0 + h, r: 1.0 },
                ],
            )
        };
        // side 1.8: centroid at distance 1.039 > 1 from each center -> hole
        assert_eq!(disk_holes(&triangle(1.8), 0.01).unwrap(), 1);
        // side 1.2: centroid at distance 0.693 < 1 -> covered
        assert_eq!(disk_holes(&triangle(1.2), 0.01).unwrap(), 0);
        assert_eq!(disk_holes(&set(10.0, vec![]), 0.01).unwrap(), 0);
    }

    #[test]
    fn resolution_guard_compares_to_min_radius() {
        let ds = set(10.0, vec![Disk { x: 5.0, y: 5.0, r: 0.2 }]);
        assert!(holes_resolution_adequate(&ds, 0.05));
        assert!(!holes_resolution_adequate(&ds, 0.06));
    }
}
