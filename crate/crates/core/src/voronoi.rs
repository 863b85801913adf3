//! Voronoi cell membership, typical-cell statistics and the gamma cell-size model.
//!
//! Cells are never constructed explicitly for membership: a location belongs
//! to the cell of site `i` when no other site is strictly closer (or, in the
//! product form, when it passes every pairwise half-plane test). A bucket grid
//! keeps nearest-site queries cheap for the window sizes used in simulation.

use std::io::{self, Write};

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{invalid, Error, Result};
use crate::geometry::{in_half_plane_m0, Point2, Window};
use crate::mc::replicate;
use crate::ppp::{check_intensity, sample_points};
use crate::report::fmt_g;

/// Shape parameter of the gamma fit to Poisson-Voronoi cell areas.
pub const GAMMA_CELL_SHAPE: f64 = 3.575;

/// Default window radius in units of `1/sqrt(lambda_b)`.
pub const DEFAULT_WINDOW_FACTOR: f64 = 8.0;
/// Distance to the window edge, in units of `1/sqrt(lambda_b)`, under which a
/// replication counts as boundary-contaminated.
pub const EDGE_MARGIN_FACTOR: f64 = 2.0;
/// Maximum tolerated share of contaminated replications.
pub const MAX_FLAGGED_FRACTION: f64 = 0.01;
/// Uniform probes per replication for hit-counting area estimates.
pub const DEFAULT_AREA_PROBES: usize = 10_000;

fn check_index(sites: &[Point2], idx0: usize) -> Result<()> {
    if sites.is_empty() {
        return Err(invalid("sites", "site list is empty"));
    }
    if idx0 >= sites.len() {
        return Err(invalid(
            "idx0",
            format!("index {idx0} out of range for {} sites", sites.len()),
        ));
    }
    Ok(())
}

/// Nearest-site definition: `x` is in cell `idx0` iff `idx0` is the
/// lowest-index site at minimal distance from `x`.
pub fn is_in_cell_direct(x: Point2, sites: &[Point2], idx0: usize) -> Result<bool> {
    check_index(sites, idx0)?;
    let d0 = x.dist_sq(sites[idx0]);
    for (j, s) in sites.iter().enumerate() {
        let d = x.dist_sq(*s);
        if d < d0 || (d == d0 && j < idx0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Product form: the indicator of cell `idx0` as the product of the half-plane
/// indicators against every other site. Short-circuits on the first failing factor.
pub fn is_in_cell_product(x: Point2, sites: &[Point2], idx0: usize) -> Result<bool> {
    check_index(sites, idx0)?;
    let r0 = sites[idx0];
    Ok(sites
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != idx0)
        .all(|(_, rk)| in_half_plane_m0(x, r0, *rk)))
}

/// Outcome of [`check_membership_equivalence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub checked: usize,
    /// Instances with an exact distance tie at the tested site, skipped.
    pub ties: usize,
    pub mismatches: usize,
}

/// Compares the product-form and nearest-site membership tests on random
/// instances: 2 to 200 sites in `[-1, 1]^2`, a location in `[-1.5, 1.5]^2`
/// and a random site index.
pub fn check_membership_equivalence(n_instances: usize, seed: u64) -> EquivalenceReport {
    let outcomes = replicate(n_instances, seed, |_, rng| {
        let n = rng.random_range(2..=200usize);
        let sites: Vec<Point2> = (0..n)
            .map(|_| Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let x = Point2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let idx0 = rng.random_range(0..n);
        let d0 = x.dist_sq(sites[idx0]);
        if sites.iter().enumerate().any(|(k, s)| k != idx0 && x.dist_sq(*s) == d0) {
            return None;
        }
        let a = is_in_cell_product(x, &sites, idx0).expect("index in range");
        let b = is_in_cell_direct(x, &sites, idx0).expect("index in range");
        Some(a == b)
    });
    let mut report = EquivalenceReport {
        checked: 0,
        ties: 0,
        mismatches: 0,
    };
    for o in outcomes {
        match o {
            None => report.ties += 1,
            Some(same) => {
                report.checked += 1;
                report.mismatches += !same as usize;
            }
        }
    }
    report
}

/// Uniform bucket grid over a set of sites.
#[derive(Debug, Clone)]
pub struct SiteIndex {
    sites: Vec<Point2>,
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    // bucket b holds site indices in ascending order
    buckets: Vec<Vec<u32>>,
}

impl SiteIndex {
    pub fn new(sites: Vec<Point2>) -> SiteIndex {
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        if let Some(first) = sites.first() {
            (xmin, xmax, ymin, ymax) = (first.x, first.x, first.y, first.y);
        }
        for p in &sites {
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
            ymin = ymin.min(p.y);
            ymax = ymax.max(p.y);
        }
        let w = (xmax - xmin).max(1e-12);
        let h = (ymax - ymin).max(1e-12);
        // about two sites per bucket
        let target = (sites.len() as f64 / 2.0).max(1.0);
        let cell = ((w * h) / target).sqrt().max(w.max(h) / 1024.0);
        let nx = ((w / cell).floor() as usize + 1).min(1024);
        let ny = ((h / cell).floor() as usize + 1).min(1024);
        let mut buckets = vec![Vec::new(); nx * ny];
        let mut index = SiteIndex {
            sites: Vec::new(),
            x0: xmin,
            y0: ymin,
            cell,
            nx,
            ny,
            buckets: Vec::new(),
        };
        for (i, p) in sites.iter().enumerate() {
            let (cx, cy) = index.bucket_of(*p);
            buckets[cy * nx + cx].push(i as u32);
        }
        index.buckets = buckets;
        index.sites = sites;
        index
    }

    pub fn sites(&self) -> &[Point2] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    fn bucket_of(&self, p: Point2) -> (usize, usize) {
        let cx = ((p.x - self.x0) / self.cell).floor();
        let cy = ((p.y - self.y0) / self.cell).floor();
        let cx = cx.clamp(0.0, (self.nx - 1) as f64) as usize;
        let cy = cy.clamp(0.0, (self.ny - 1) as f64) as usize;
        (cx, cy)
    }

    /// Calls `visit` on every non-empty bucket at Chebyshev offset `ring` from `center`.
    fn for_ring<F: FnMut(&[u32])>(&self, center: (usize, usize), ring: usize, mut visit: F) {
        let r = ring as isize;
        let (cx, cy) = (center.0 as isize, center.1 as isize);
        for dy in -r..=r {
            let y = cy + dy;
            if y < 0 || y >= self.ny as isize {
                continue;
            }
            // interior rows only touch the two side columns
            let step = if dy.abs() == r { 1 } else { (2 * r).max(1) };
            let mut dx = -r;
            while dx <= r {
                let x = cx + dx;
                if x >= 0 && x < self.nx as isize {
                    let b = &self.buckets[y as usize * self.nx + x as usize];
                    if !b.is_empty() {
                        visit(b);
                    }
                }
                dx += step;
            }
        }
    }

    /// Index and squared distance of the lowest-index nearest site.
    pub fn nearest(&self, x: Point2) -> Option<(usize, f64)> {
        if self.sites.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let center = self.bucket_of(x);
        for ring in 0..=self.nx.max(self.ny) {
            self.for_ring(center, ring, |bucket| {
                for &i in bucket {
                    let i = i as usize;
                    let d = x.dist_sq(self.sites[i]);
                    best = match best {
                        Some((bi, bd)) if d > bd || (d == bd && i > bi) => Some((bi, bd)),
                        _ => Some((i, d)),
                    };
                }
            });
            // rings beyond this one are at least ring * cell away
            if let Some((_, bd)) = best {
                let reach = ring as f64 * self.cell;
                if reach * reach > bd {
                    break;
                }
            }
        }
        best
    }

    /// `true` iff some site lies strictly within squared distance `r_sq` of `x`.
    pub fn any_within(&self, x: Point2, r_sq: f64) -> bool {
        if self.sites.is_empty() {
            return false;
        }
        let center = self.bucket_of(x);
        let mut found = false;
        for ring in 0..=self.nx.max(self.ny) {
            let reach = ring.saturating_sub(1) as f64 * self.cell;
            if reach * reach >= r_sq {
                break;
            }
            self.for_ring(center, ring, |bucket| {
                found = found || bucket.iter().any(|&i| x.dist_sq(self.sites[i as usize]) < r_sq);
            });
            if found {
                break;
            }
        }
        found
    }
}

/// The cell of a site placed at the origin, tested against the remaining sites.
#[derive(Debug, Clone)]
pub struct TypicalCell {
    others: SiteIndex,
}

impl TypicalCell {
    /// `sites[0]` must be the origin; the rest are the competing sites.
    pub fn new(sites: &[Point2]) -> Result<TypicalCell> {
        match sites.first() {
            None => Err(invalid("sites", "site list is empty")),
            Some(p) if *p != Point2::ORIGIN => Err(invalid(
                "sites",
                format!("first site must be the origin, got ({}, {})", p.x, p.y),
            )),
            Some(_) => Ok(TypicalCell::from_others(sites[1..].to_vec())),
        }
    }

    /// Cell of the origin against `others` (which must not contain the origin site itself).
    pub fn from_others(others: Vec<Point2>) -> TypicalCell {
        TypicalCell {
            others: SiteIndex::new(others),
        }
    }

    pub fn others(&self) -> &[Point2] {
        self.others.sites()
    }

    /// Ties go to the origin site (lowest index).
    pub fn contains(&self, x: Point2) -> bool {
        !self.others.any_within(x, x.norm_sq())
    }

    /// Exact bounding radius of the cell intersected with the square `[-half, half]^2`.
    ///
    /// Clips the square by the perpendicular bisectors of the sites in order of
    /// distance; a site farther than twice the current maximum vertex norm cannot
    /// cut the polygon, which ends the sweep.
    pub fn bounding_radius(&self, half: f64) -> f64 {
        self.polygon(half)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Vertices of the cell clipped to `[-half, half]^2`, counter-clockwise.
    pub fn polygon(&self, half: f64) -> Vec<Point2> {
        let mut by_norm: Vec<Point2> = self.others().to_vec();
        by_norm.sort_by(|a, b| a.norm_sq().total_cmp(&b.norm_sq()));
        let mut poly = vec![
            Point2::new(-half, -half),
            Point2::new(half, -half),
            Point2::new(half, half),
            Point2::new(-half, half),
        ];
        for r in by_norm {
            let reach = poly.iter().map(|v| v.norm_sq()).fold(0.0, f64::max);
            if r.norm_sq() > 4.0 * reach {
                break;
            }
            poly = clip_half_plane(&poly, r);
            if poly.is_empty() {
                break;
            }
        }
        poly
    }
}

/// Keeps the part of `poly` with `v . r <= |r|^2 / 2`.
fn clip_half_plane(poly: &[Point2], r: Point2) -> Vec<Point2> {
    let c = r.norm_sq() / 2.0;
    let side = |v: Point2| v.x * r.x + v.y * r.y - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa <= 0.0) != (sb <= 0.0) {
            let t = sa / (sa - sb);
            out.push(Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
    }
    out
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    let mut twice = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    twice.abs() / 2.0
}

/// Number of UE points whose nearest site is the origin. `sites[0]` must be the origin.
pub fn count_ues_in_typical_cell(sites: &[Point2], ues: &[Point2]) -> Result<usize> {
    let cell = TypicalCell::new(sites)?;
    Ok(ues.iter().filter(|u| cell.contains(**u)).count())
}

/// Per-replication typical-cell samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    /// UEs inside the origin cell; zero when no UE process was sampled.
    pub ue_counts: Vec<u64>,
    pub areas: Vec<f64>,
    pub lambda_b: f64,
    /// Replications whose cell came within the edge margin of the window.
    pub flagged: usize,
}

impl CellStats {
    pub fn n_replications(&self) -> usize {
        self.areas.len()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "replication,ue_count,cell_area")?;
        for (i, (n, a)) in self.ue_counts.iter().zip(&self.areas).enumerate() {
            writeln!(out, "{i},{n},{}", fmt_g(*a))?;
        }
        Ok(())
    }
}

/// Options for [`typical_cell_mc`].
#[derive(Debug, Clone, Copy)]
pub struct CellSampling {
    pub lambda_b: f64,
    /// UE intensity; `None` skips UE sampling.
    pub lambda_u: Option<f64>,
    pub window: Window,
    pub probes: usize,
}

impl CellSampling {
    /// Default-sized window (radius `8/sqrt(lambda_b)`) and probe budget.
    pub fn new(lambda_b: f64) -> Result<CellSampling> {
        check_intensity(lambda_b)?;
        Ok(CellSampling {
            lambda_b,
            lambda_u: None,
            window: Window::centered_disk(DEFAULT_WINDOW_FACTOR / lambda_b.sqrt())?,
            probes: DEFAULT_AREA_PROBES,
        })
    }
}

pub(crate) fn edge_margin(lambda_b: f64) -> f64 {
    EDGE_MARGIN_FACTOR / lambda_b.sqrt()
}

pub(crate) fn check_flagged(flagged: usize, total: usize) -> Result<()> {
    if flagged as f64 > MAX_FLAGGED_FRACTION * total as f64 {
        return Err(Error::WindowTooSmall { flagged, total });
    }
    Ok(())
}

/// Samples the typical cell `n_rep` times: BS PPP plus an origin site, optional
/// UE PPP counted inside the origin cell, and a hit-counting area estimate.
pub fn typical_cell_mc(cfg: &CellSampling, n_rep: usize, seed: u64) -> Result<CellStats> {
    check_intensity(cfg.lambda_b)?;
    if let Some(lu) = cfg.lambda_u {
        check_intensity(lu)?;
    }
    cfg.window.validate()?;
    if n_rep == 0 {
        return Err(invalid("n_rep", "need at least one replication"));
    }
    if cfg.probes == 0 {
        return Err(invalid("probes", "need at least one probe"));
    }
    let margin = edge_margin(cfg.lambda_b);
    let (x0, x1, y0, y1) = cfg.window.bounding_box();
    let half = [x0, x1, y0, y1].iter().map(|v| v.abs()).fold(0.0, f64::max);

    let reps = replicate(n_rep, seed, |_, rng| -> Result<(u64, f64, bool)> {
        let bs = sample_points(cfg.lambda_b, &cfg.window, rng)?;
        let cell = TypicalCell::from_others(bs);
        let mut touched = false;
        let count = match cfg.lambda_u {
            Some(lu) => {
                let ues = sample_points(lu, &cfg.window, rng)?;
                let mut n = 0u64;
                for u in ues.iter().filter(|u| cell.contains(**u)) {
                    n += 1;
                    touched |= cfg.window.distance_to_edge(*u) < margin;
                }
                n
            }
            None => 0,
        };
        let rho = cell.bounding_radius(half);
        let probe_disk = Window::centered_disk(rho.max(f64::MIN_POSITIVE))?;
        let mut hits = 0usize;
        for _ in 0..cfg.probes {
            let p = probe_disk.sample_uniform(rng);
            if cell.contains(p) && cfg.window.contains(p) {
                hits += 1;
                touched |= cfg.window.distance_to_edge(p) < margin;
            }
        }
        let area = probe_disk.area() * hits as f64 / cfg.probes as f64;
        Ok((count, area, touched))
    });

    let mut stats = CellStats {
        ue_counts: Vec::with_capacity(n_rep),
        areas: Vec::with_capacity(n_rep),
        lambda_b: cfg.lambda_b,
        flagged: 0,
    };
    for r in reps {
        let (n, a, touched) = r?;
        stats.ue_counts.push(n);
        stats.areas.push(a);
        stats.flagged += touched as usize;
    }
    check_flagged(stats.flagged, n_rep)?;
    Ok(stats)
}

/// Typical-cell areas only (UE counts are zero).
pub fn typical_cell_area_mc(
    lambda_b: f64,
    window: Window,
    n_rep: usize,
    seed: u64,
) -> Result<CellStats> {
    let mut cfg = CellSampling::new(lambda_b)?;
    cfg.window = window;
    typical_cell_mc(&cfg, n_rep, seed)
}

/// Gamma approximation to the Poisson-Voronoi cell-area law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaCellModel {
    pub shape: f64,
    pub scale: f64,
}

impl GammaCellModel {
    pub fn new(lambda_b: f64) -> Result<GammaCellModel> {
        check_intensity(lambda_b)?;
        Ok(GammaCellModel {
            shape: GAMMA_CELL_SHAPE,
            scale: 1.0 / (GAMMA_CELL_SHAPE * lambda_b),
        })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn cdf(&self, area: f64) -> f64 {
        if area <= 0.0 {
            return 0.0;
        }
        Gamma::new(self.shape, 1.0 / self.scale)
            .expect("positive gamma parameters")
            .cdf(area)
    }
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
