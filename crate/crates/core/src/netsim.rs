//! Monte Carlo model of a frequency-reuse-1 cellular downlink with Rayleigh
//! fading and truncated-SINR bandwidth allocation.
//!
//! Two constructions are used and must not be mixed up:
//! * consumption ([`estimate_w_mc`]): a BS sits at the origin and every UE in
//!   its Voronoi cell is served by it;
//! * coverage ([`estimate_coverage_mc`]): a UE sits at the origin and is served
//!   by the nearest BS of the process.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point2, Window};
use crate::mc::{replicate, Estimate, SimRng};
use crate::ppp::{check_intensity, sample_points};
use crate::report::fmt_g;
use crate::voronoi::{check_flagged, edge_margin, TypicalCell, DEFAULT_WINDOW_FACTOR};

/// Transmit SNR `p_tx / (W N0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TxSnr {
    /// Noise-free: the `1/gamma_tx` term is exactly zero.
    Infinite,
    Finite(f64),
}

impl TxSnr {
    /// Noise term `1/gamma_tx` in the SINR denominator.
    pub fn noise(&self) -> f64 {
        match *self {
            TxSnr::Infinite => 0.0,
            TxSnr::Finite(g) => 1.0 / g,
        }
    }

    /// `inf` maps to [`TxSnr::Infinite`].
    pub fn from_linear(g: f64) -> TxSnr {
        if g == f64::INFINITY {
            TxSnr::Infinite
        } else {
            TxSnr::Finite(g)
        }
    }
}

/// Physical parameters of the simulated network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkScenario {
    /// BS intensity per m^2.
    pub lambda_b: f64,
    /// UE intensity per m^2.
    pub lambda_u: f64,
    pub path_loss_exp: f64,
    /// Target rate, bits/s.
    pub rate: f64,
    /// SINR service threshold, linear.
    pub gamma: f64,
    pub tx_snr: TxSnr,
    /// Window radius in units of `1/sqrt(lambda_b)`.
    pub window_radius_factor: f64,
}

impl Default for NetworkScenario {
    fn default() -> Self {
        NetworkScenario {
            lambda_b: 1.0,
            lambda_u: 10.0,
            path_loss_exp: 4.0,
            rate: 1e4,
            gamma: 1.0,
            tx_snr: TxSnr::Infinite,
            window_radius_factor: DEFAULT_WINDOW_FACTOR,
        }
    }
}

/// Smallest accepted window radius factor.
pub const MIN_WINDOW_FACTOR: f64 = 6.0;

impl NetworkScenario {
    pub fn validate(&self) -> Result<()> {
        check_intensity(self.lambda_b).map_err(|_| invalid("lambda_b", "must be positive"))?;
        check_intensity(self.lambda_u).map_err(|_| invalid("lambda_u", "must be positive"))?;
        if !(self.path_loss_exp > 2.0 && self.path_loss_exp.is_finite()) {
            return Err(invalid(
                "path_loss_exp",
                format!("must exceed 2, got {}", self.path_loss_exp),
            ));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(invalid("rate", format!("must be positive, got {}", self.rate)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid(
                "gamma",
                format!(
                    "must be positive, got {} (without truncation W(0) tends to infinity)",
                    self.gamma
                ),
            ));
        }
        if let TxSnr::Finite(g) = self.tx_snr {
            if !(g > 0.0) {
                return Err(invalid("gamma_tx", format!("must be positive, got {g}")));
            }
        }
        if !(self.window_radius_factor >= MIN_WINDOW_FACTOR && self.window_radius_factor.is_finite()) {
            return Err(invalid(
                "window_radius_factor",
                format!(
                    "must be at least {MIN_WINDOW_FACTOR}, got {}",
                    self.window_radius_factor
                ),
            ));
        }
        Ok(())
    }

    /// `lambda_u / lambda_b`.
    pub fn ue_ratio(&self) -> f64 {
        self.lambda_u / self.lambda_b
    }

    pub fn with_gamma(&self, gamma: f64) -> NetworkScenario {
        NetworkScenario { gamma, ..*self }
    }

    pub fn window_radius(&self) -> f64 {
        self.window_radius_factor / self.lambda_b.sqrt()
    }

    pub fn window(&self) -> Result<Window> {
        Window::centered_disk(self.window_radius())
    }

    fn path_gain(&self, d_sq: f64) -> f64 {
        if self.path_loss_exp == 4.0 {
            1.0 / (d_sq * d_sq)
        } else {
            d_sq.powf(-0.5 * self.path_loss_exp)
        }
    }
}

/// One draw of the network: BS sites (entry 0 at the origin), UE locations,
/// and Exp(1) fading for every (BS, UE) pair.
///
/// Fading is stored as a key. Row `k` (the gains from every BS to UE `k`) is
/// generated on demand from ChaCha stream `k`, so the full matrix is fixed by
/// the realization without being materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub bs_points: Vec<Point2>,
    pub ue_points: Vec<Point2>,
    pub fading_key: u64,
}

impl NetworkRealization {
    /// `|h_j^k|^2` for all BSs `j` to UE `k`.
    pub fn fading_row(&self, k: usize) -> Vec<f64> {
        let mut rng = SimRng::seed_from_u64(self.fading_key);
        rng.set_stream(k as u64);
        (0..self.bs_points.len())
            .map(|_| Exp1.sample(&mut rng))
            .collect()
    }

    pub fn fading(&self, j: usize, k: usize) -> f64 {
        self.fading_row(k)[j]
    }

    /// Full `fading[j][k]` matrix.
    pub fn fading_matrix(&self) -> Vec<Vec<f64>> {
        let rows: Vec<Vec<f64>> = (0..self.ue_points.len()).map(|k| self.fading_row(k)).collect();
        (0..self.bs_points.len())
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect()
    }

    pub fn typical_cell(&self) -> TypicalCell {
        TypicalCell::from_others(self.bs_points[1..].to_vec())
    }
}

/// Draws a realization from a generator seeded with `seed`.
pub fn realize_network(scenario: &NetworkScenario, seed: u64) -> Result<NetworkRealization> {
    let mut rng = SimRng::seed_from_u64(seed);
    realize_with(scenario, &mut rng)
}

pub fn realize_with<R: Rng + ?Sized>(
    scenario: &NetworkScenario,
    rng: &mut R,
) -> Result<NetworkRealization> {
    scenario.validate()?;
    let window = scenario.window()?;
    let mut bs_points = vec![Point2::ORIGIN];
    bs_points.extend(sample_points(scenario.lambda_b, &window, rng)?);
    let ue_points = sample_points(scenario.lambda_u, &window, rng)?;
    Ok(NetworkRealization {
        bs_points,
        ue_points,
        fading_key: rng.random(),
    })
}

fn sinr_from_row(
    x: Point2,
    bs: &[Point2],
    row: &[f64],
    serving: usize,
    scenario: &NetworkScenario,
) -> f64 {
    let mut interference = 0.0;
    for (j, (b, h)) in bs.iter().zip(row).enumerate() {
        if j != serving {
            interference += h * scenario.path_gain(x.dist_sq(*b));
        }
    }
    let signal = row[serving] * scenario.path_gain(x.dist_sq(bs[serving]));
    signal / (scenario.tx_snr.noise() + interference)
}

/// SINR of UE `ue_index` served by the origin BS, all other BSs interfering.
pub fn sinr(
    ue_index: usize,
    realization: &NetworkRealization,
    scenario: &NetworkScenario,
) -> Result<f64> {
    let x = *realization.ue_points.get(ue_index).ok_or_else(|| {
        invalid(
            "ue_index",
            format!("{ue_index} out of range for {} UEs", realization.ue_points.len()),
        )
    })?;
    if x == realization.bs_points[0] {
        return Err(Error::SingularPathLoss { ue: ue_index });
    }
    let row = realization.fading_row(ue_index);
    Ok(sinr_from_row(x, &realization.bs_points, &row, 0, scenario))
}

/// Truncated allocation: `rate / log2(1 + sinr)` when `sinr >= gamma`, else 0.
pub fn allocated_bandwidth(sinr_value: f64, rate: f64, gamma: f64) -> f64 {
    if sinr_value >= gamma {
        rate / sinr_value.ln_1p() * std::f64::consts::LN_2
    } else {
        0.0
    }
}

/// Consumption of the origin cell in one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellConsumption {
    pub n_ues_in_cell: usize,
    pub n_served: usize,
    pub consumption: f64,
    /// Some in-cell UE lies within the edge margin of the window.
    pub near_edge: bool,
}

/// SINRs of all UEs of the origin cell, plus the edge flag.
fn in_cell_sinrs(
    realization: &NetworkRealization,
    scenario: &NetworkScenario,
) -> Result<(Vec<f64>, bool)> {
    let cell = realization.typical_cell();
    let window = scenario.window()?;
    let margin = edge_margin(scenario.lambda_b);
    let mut out = Vec::new();
    let mut near_edge = false;
    for (k, x) in realization.ue_points.iter().enumerate() {
        if !cell.contains(*x) {
            continue;
        }
        if *x == Point2::ORIGIN {
            return Err(Error::SingularPathLoss { ue: k });
        }
        near_edge |= window.distance_to_edge(*x) < margin;
        let row = realization.fading_row(k);
        out.push(sinr_from_row(*x, &realization.bs_points, &row, 0, scenario));
    }
    Ok((out, near_edge))
}

fn consumption_at(sinrs: &[f64], rate: f64, gamma: f64) -> (usize, f64) {
    sinrs.iter().fold((0, 0.0), |(n, total), s| {
        let w = allocated_bandwidth(*s, rate, gamma);
        (n + (*s >= gamma) as usize, total + w)
    })
}

/// Sum of allocated bandwidth over the UEs whose nearest BS is the origin.
pub fn typical_cell_consumption(
    realization: &NetworkRealization,
    scenario: &NetworkScenario,
) -> Result<CellConsumption> {
    scenario.validate()?;
    let (sinrs, near_edge) = in_cell_sinrs(realization, scenario)?;
    let (n_served, consumption) = consumption_at(&sinrs, scenario.rate, scenario.gamma);
    Ok(CellConsumption {
        n_ues_in_cell: sinrs.len(),
        n_served,
        consumption,
        near_edge,
    })
}

/// Per-replication consumption record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationRecord {
    pub replication: u64,
    pub n_ues_in_cell: usize,
    pub n_served: usize,
    pub consumption: f64,
}

pub fn write_replications_csv<W: Write>(records: &[ReplicationRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "replication,n_ues_in_cell,n_served,consumption")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{}",
            r.replication,
            r.n_ues_in_cell,
            r.n_served,
            fmt_g(r.consumption)
        )?;
    }
    Ok(())
}

fn check_reps(n_rep: usize, min: usize) -> Result<()> {
    if n_rep < min {
        return Err(invalid("n_rep", format!("need at least {min} replications, got {n_rep}")));
    }
    Ok(())
}

/// Minimum replication count for the consumption estimator.
pub const MIN_W_REPLICATIONS: usize = 1000;

/// Typical-cell consumption for every threshold in `gammas`, evaluated on
/// shared realizations (common random numbers across the grid).
pub fn estimate_w_mc_grid(
    scenario: &NetworkScenario,
    gammas: &[f64],
    n_rep: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    scenario.validate()?;
    check_reps(n_rep, MIN_W_REPLICATIONS)?;
    for &g in gammas {
        scenario.with_gamma(g).validate()?;
    }
    let reps = replicate(n_rep, seed, |_, rng| -> Result<(Vec<f64>, bool)> {
        let real = realize_with(scenario, rng)?;
        let (sinrs, near_edge) = in_cell_sinrs(&real, scenario)?;
        let per_gamma = gammas
            .iter()
            .map(|g| consumption_at(&sinrs, scenario.rate, *g).1)
            .collect();
        Ok((per_gamma, near_edge))
    });
    let mut columns = vec![Vec::with_capacity(n_rep); gammas.len()];
    let mut flagged = 0;
    for r in reps {
        let (vals, near_edge) = r?;
        flagged += near_edge as usize;
        for (col, v) in columns.iter_mut().zip(vals) {
            col.push(v);
        }
    }
    check_flagged(flagged, n_rep)?;
    Ok(columns.iter().map(|c| Estimate::from_samples(c)).collect())
}

/// Monte Carlo estimate of the mean typical-cell consumption `W`.
pub fn estimate_w_mc(scenario: &NetworkScenario, n_rep: usize, seed: u64) -> Result<Estimate> {
    Ok(estimate_w_mc_grid(scenario, &[scenario.gamma], n_rep, seed)?[0])
}

/// Per-replication records behind [`estimate_w_mc`], same seeds.
pub fn w_mc_replications(
    scenario: &NetworkScenario,
    n_rep: usize,
    seed: u64,
) -> Result<Vec<ReplicationRecord>> {
    scenario.validate()?;
    let reps = replicate(n_rep, seed, |rep, rng| -> Result<(ReplicationRecord, bool)> {
        let real = realize_with(scenario, rng)?;
        let c = typical_cell_consumption(&real, scenario)?;
        Ok((
            ReplicationRecord {
                replication: rep,
                n_ues_in_cell: c.n_ues_in_cell,
                n_served: c.n_served,
                consumption: c.consumption,
            },
            c.near_edge,
        ))
    });
    let mut out = Vec::with_capacity(n_rep);
    let mut flagged = 0;
    for r in reps {
        let (rec, near_edge) = r?;
        flagged += near_edge as usize;
        out.push(rec);
    }
    check_flagged(flagged, n_rep)?;
    Ok(out)
}

/// Nearest-BS SINR of a UE at the origin. Returns `None` when the window holds
/// no BS at all.
fn origin_ue_sinr<R: Rng + ?Sized>(
    scenario: &NetworkScenario,
    window: &Window,
    rng: &mut R,
) -> Result<Option<(f64, f64)>> {
    let bs = sample_points(scenario.lambda_b, window, rng)?;
    let Some((serving, _)) = bs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm_sq().total_cmp(&b.1.norm_sq()))
    else {
        return Ok(None);
    };
    let row: Vec<f64> = (0..bs.len()).map(|_| Exp1.sample(rng)).collect();
    let s = sinr_from_row(Point2::ORIGIN, &bs, &row, serving, scenario);
    Ok(Some((s, bs[serving].norm())))
}

/// Coverage `P(SINR >= gamma)` for each threshold, shared realizations.
pub fn estimate_coverage_mc_grid(
    scenario: &NetworkScenario,
    gammas: &[f64],
    n_rep: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    scenario.validate()?;
    check_reps(n_rep, 1)?;
    let window = scenario.window()?;
    let limit = scenario.window_radius() - edge_margin(scenario.lambda_b);
    let reps = replicate(n_rep, seed, |_, rng| origin_ue_sinr(scenario, &window, rng));
    let mut columns = vec![Vec::with_capacity(n_rep); gammas.len()];
    let mut flagged = 0;
    for r in reps {
        let draw = r?;
        if draw.is_none_or(|(_, r0)| r0 > limit) {
            flagged += 1;
        }
        let s = draw.map_or(0.0, |(s, _)| s);
        for (col, g) in columns.iter_mut().zip(gammas) {
            col.push((s >= *g) as u8 as f64);
        }
    }
    check_flagged(flagged, n_rep)?;
    Ok(columns.iter().map(|c| Estimate::from_samples(c)).collect())
}

/// Coverage probability of a UE at the origin served by its nearest BS.
pub fn estimate_coverage_mc(scenario: &NetworkScenario, n_rep: usize, seed: u64) -> Result<Estimate> {
    Ok(estimate_coverage_mc_grid(scenario, &[scenario.gamma], n_rep, seed)?[0])
}

/// Mean number of UEs in the origin cell.
pub fn estimate_mean_ues(scenario: &NetworkScenario, n_rep: usize, seed: u64) -> Result<Estimate> {
    scenario.validate()?;
    check_reps(n_rep, 1)?;
    let window = scenario.window()?;
    let margin = edge_margin(scenario.lambda_b);
    let reps = replicate(n_rep, seed, |_, rng| -> Result<(f64, bool)> {
        let bs = sample_points(scenario.lambda_b, &window, rng)?;
        let ues = sample_points(scenario.lambda_u, &window, rng)?;
        let cell = TypicalCell::from_others(bs);
        let mut n = 0usize;
        let mut near_edge = false;
        for u in ues.iter().filter(|u| cell.contains(**u)) {
            n += 1;
            near_edge |= window.distance_to_edge(*u) < margin;
        }
        Ok((n as f64, near_edge))
    });
    let mut counts = Vec::with_capacity(n_rep);
    let mut flagged = 0;
    for r in reps {
        let (n, near_edge) = r?;
        counts.push(n);
        flagged += near_edge as usize;
    }
    check_flagged(flagged, n_rep)?;
    Ok(Estimate::from_samples(&counts))
}
