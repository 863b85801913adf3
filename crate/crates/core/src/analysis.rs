//! Closed forms for the interference-limited, path-loss-4 downlink:
//! network-wide bandwidth consumption, its product-of-averages approximation,
//! and the nearest-BS coverage probability.
//!
//! Everything is in linear SINR units. Consumption integrals are evaluated in
//! integrated-by-parts form, `int_0^wth w dF(w) = int_0^wth (F(wth) - F(w)) dw`,
//! which avoids differentiating the integrand numerically and avoids cancelling
//! two large terms when `wth` is large.

use std::f64::consts::LN_2;

use crate::error::{invalid, Result};
use crate::netsim::{NetworkScenario, TxSnr};
use crate::quadrature::{integrate_1d, QuadratureSpec};

/// Above this `eta` the ratio G is below 1e-74 and is treated as zero.
const ETA_CUTOFF: f64 = 1e150;
/// Relative gap `|eta - gamma| / gamma` below which series forms replace the ratio.
const SERIES_GAP: f64 = 1e-5;

pub(crate) fn t_of(x: f64) -> f64 {
    let s = x.sqrt();
    1.0 + s * s.atan()
}

/// `1 + sqrt(x) atan(sqrt(x))`.
pub fn t_function(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(invalid("x", format!("must be nonnegative, got {x}")));
    }
    Ok(t_of(x))
}

/// `atan(sqrt x) / sqrt x` with its limit 1 at zero.
fn atan_ratio(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - x / 3.0
    } else {
        let s = x.sqrt();
        s.atan() / s
    }
}

/// First derivative of [`t_function`].
pub fn t_prime(x: f64) -> f64 {
    0.5 * atan_ratio(x) + 0.5 / (1.0 + x)
}

/// Second derivative of [`t_function`].
pub fn t_second(x: f64) -> f64 {
    if x < 1e-4 {
        // (1/(1+x) - atan(s)/s) / 4x = -1/6 + x/5 - 6x^2/28 + ...
        -1.0 / 6.0 + x / 5.0 - 3.0 * x * x / 14.0 - 0.5 / ((1.0 + x) * (1.0 + x))
    } else {
        (1.0 / (1.0 + x) - atan_ratio(x)) / (4.0 * x) - 0.5 / ((1.0 + x) * (1.0 + x))
    }
}

// h(x) = x T(x) and its derivatives
fn h1(x: f64) -> f64 {
    t_of(x) + x * t_prime(x)
}

fn h2(x: f64) -> f64 {
    2.0 * t_prime(x) + x * t_second(x)
}

/// SINR needed to serve a UE with bandwidth `w` at rate `rate`: `2^(rate/w) - 1`.
///
/// The inverse of the allocation rule, so `eta(w_threshold(R, g), R) == g`.
pub fn eta(w: f64, rate: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(invalid("w", format!("bandwidth must be positive, got {w}")));
    }
    if !(rate > 0.0) {
        return Err(invalid("rate", format!("must be positive, got {rate}")));
    }
    Ok(eta_of(w, rate))
}

pub(crate) fn eta_of(w: f64, rate: f64) -> f64 {
    (rate / w * LN_2).exp_m1()
}

/// Largest per-UE bandwidth, `rate / log2(1 + gamma)`.
///
/// Grows like `rate / (gamma log2 e)` as `gamma -> 0`; tiny thresholds return
/// correspondingly huge finite values.
pub fn w_threshold(rate: f64, gamma: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(invalid("rate", format!("must be positive, got {rate}")));
    }
    if !(gamma > 0.0) {
        return Err(invalid("gamma", format!("must be positive, got {gamma}")));
    }
    Ok(rate * LN_2 / gamma.ln_1p())
}

fn g_of(eta: f64, gamma: f64) -> f64 {
    if !(eta < ETA_CUTOFF) {
        return 0.0;
    }
    let u = eta - gamma;
    if u.abs() <= SERIES_GAP * gamma {
        // divided difference of h at the midpoint, exact to O(u^2)
        return 1.0 / h1(gamma + 0.5 * u);
    }
    u / (eta * t_of(eta) - gamma * t_of(gamma))
}

fn dg_deta(eta: f64, gamma: f64) -> f64 {
    let u = eta - gamma;
    if u.abs() <= SERIES_GAP * gamma {
        let q = h1(gamma + 0.5 * u);
        let dq = 0.5 * h2(gamma + 2.0 * u / 3.0);
        return -dq / (q * q);
    }
    let v = eta * t_of(eta) - gamma * t_of(gamma);
    (1.0 - u / v * h1(eta)) / v
}

fn check_g_domain(w: f64, gamma: f64, rate: f64) -> Result<f64> {
    let wth = w_threshold(rate, gamma)?;
    if !(w > 0.0 && w <= wth) {
        return Err(invalid("w", format!("must lie in (0, {wth}], got {w}")));
    }
    Ok(wth)
}

/// `(eta(w) - gamma) / (eta(w) T(eta(w)) - gamma T(gamma))` on `(0, wth]`.
///
/// At `w = wth` the ratio is 0/0; its limit `1 / (T(gamma) + gamma T'(gamma))`
/// is returned there.
pub fn g_ratio(w: f64, gamma: f64, rate: f64) -> Result<f64> {
    let wth = check_g_domain(w, gamma, rate)?;
    if w == wth {
        return Ok(g_at_threshold(gamma));
    }
    Ok(g_of(eta_of(w, rate), gamma))
}

/// `1 / (T(gamma) + gamma T'(gamma))`.
pub fn g_at_threshold(gamma: f64) -> f64 {
    1.0 / h1(gamma)
}

/// Analytic `dG/dw`, through `d eta / dw = -(rate ln 2 / w^2) 2^(rate/w)`.
pub fn g_ratio_prime(w: f64, gamma: f64, rate: f64) -> Result<f64> {
    check_g_domain(w, gamma, rate)?;
    Ok(g_prime_of(w, gamma, rate))
}

fn g_prime_of(w: f64, gamma: f64, rate: f64) -> f64 {
    let e = eta_of(w, rate);
    if !(e < ETA_CUTOFF) {
        return 0.0;
    }
    let deta_dw = -(rate * LN_2 / (w * w)) * (1.0 + e);
    dg_deta(e, gamma) * deta_dw
}

/// Refuses scenarios outside the closed forms' domain (path loss 4, no noise, `gamma > 0`).
pub fn check_closed_form_domain(scenario: &NetworkScenario) -> Result<()> {
    scenario.validate()?;
    if scenario.path_loss_exp != 4.0 {
        return Err(invalid(
            "path_loss_exp",
            format!(
                "closed forms are derived for e = 4 only, got {}",
                scenario.path_loss_exp
            ),
        ));
    }
    if scenario.tx_snr != TxSnr::Infinite {
        return Err(invalid(
            "gamma_tx",
            "closed forms assume an interference-limited network (gamma_tx = inf)",
        ));
    }
    Ok(())
}

fn w_guard(scenario: &NetworkScenario) -> Result<()> {
    if !(scenario.gamma > 0.0) {
        return Err(invalid(
            "gamma",
            "threshold must be positive: without truncation W(0) tends to infinity",
        ));
    }
    check_closed_form_domain(scenario)
}

/// `int_0^wth (F(wth) - F(w)) dw` for a CDF-like `F` increasing in `w`.
fn by_parts<F: Fn(f64) -> f64>(
    cdf: F,
    at_threshold: f64,
    wth: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok(integrate_1d(|w| at_threshold - cdf(w), 0.0, wth, quad)?.value)
}

/// Network-wide average consumption `W(gamma)` in its closed form
/// `(lu/lb) int_0^wth w dG(w)`, evaluated by parts.
pub fn w_closed_form(scenario: &NetworkScenario, quad: &QuadratureSpec) -> Result<f64> {
    w_guard(scenario)?;
    let (rate, gamma) = (scenario.rate, scenario.gamma);
    let wth = w_threshold(rate, gamma)?;
    let integral = by_parts(
        |w| g_of(eta_of(w, rate), gamma),
        g_at_threshold(gamma),
        wth,
        quad,
    )?;
    Ok(scenario.ue_ratio() * integral)
}

/// Same quantity by direct quadrature of `w G'(w)` with the analytic derivative.
pub fn w_closed_form_direct(scenario: &NetworkScenario, quad: &QuadratureSpec) -> Result<f64> {
    w_guard(scenario)?;
    let (rate, gamma) = (scenario.rate, scenario.gamma);
    let wth = w_threshold(rate, gamma)?;
    let q = integrate_1d(|w| w * g_prime_of(w, gamma, rate), 0.0, wth, quad)?;
    Ok(scenario.ue_ratio() * q.value)
}

/// Approximation `n_u * w_0`: mean UEs per cell times the mean consumption of a
/// UE at the origin served by its nearest BS, including the trailing
/// `1/T(gamma)` factor.
pub fn w_approx(scenario: &NetworkScenario, quad: &QuadratureSpec) -> Result<f64> {
    let per_cell = served_ue_integral(scenario, quad)?;
    Ok(per_cell / t_of(scenario.gamma))
}

/// Expected consumption of the origin cell under the simulated allocation rule,
/// from the served-UE count measure: the mean number of UEs in the cell with
/// SINR at least `t` is `(lu/lb) / T(t)`, so the consumption is
/// `(lu/lb) int_0^wth w d[1/T(eta(w))]`.
///
/// Equals `T(gamma) * w_approx`. Kept as an independent reference for the
/// Monte Carlo estimator.
pub fn w_served_count(scenario: &NetworkScenario, quad: &QuadratureSpec) -> Result<f64> {
    served_ue_integral(scenario, quad)
}

fn served_ue_integral(scenario: &NetworkScenario, quad: &QuadratureSpec) -> Result<f64> {
    w_guard(scenario)?;
    let (rate, gamma) = (scenario.rate, scenario.gamma);
    let wth = w_threshold(rate, gamma)?;
    let cdf = |w: f64| {
        let e = eta_of(w, rate);
        if e < ETA_CUTOFF {
            1.0 / t_of(e)
        } else {
            0.0
        }
    };
    let integral = by_parts(cdf, 1.0 / t_of(gamma), wth, quad)?;
    Ok(scenario.ue_ratio() * integral)
}

/// Probability that a UE at the origin, served by its nearest BS, has SINR at
/// least `gamma`: `1 / T(gamma)`.
pub fn coverage_closed_form(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(invalid("gamma", format!("must be positive, got {gamma}")));
    }
    Ok(1.0 / t_of(gamma))
}

/// Mean number of UEs in the typical cell, `lambda_u / lambda_b`.
pub fn mean_ues_closed_form(lambda_u: f64, lambda_b: f64) -> Result<f64> {
    if !(lambda_u > 0.0 && lambda_b > 0.0) {
        return Err(invalid("intensity", "lambda_u and lambda_b must be positive"));
    }
    Ok(lambda_u / lambda_b)
}

/// A consumption curve over a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthCurve {
    pub gamma_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
}

impl BandwidthCurve {
    pub fn new(gamma_grid: Vec<f64>, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if gamma_grid.len() != values.len() {
            return Err(invalid("values", "grid and values differ in length"));
        }
        if gamma_grid.iter().any(|g| !(*g > 0.0)) {
            return Err(invalid("gamma_grid", "thresholds must be positive"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("values", "values must be finite and nonnegative"));
        }
        Ok(BandwidthCurve {
            gamma_grid,
            values,
            label: label.into(),
        })
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] > w[0])
    }
}

/// `W(gamma)` along a threshold sequence decreasing toward zero. The
/// consumption diverges as `gamma -> 0`, so the values should strictly increase.
pub fn divergence_scan(
    scenario: &NetworkScenario,
    gammas: &[f64],
    quad: &QuadratureSpec,
) -> Result<BandwidthCurve> {
    if gammas.iter().any(|g| !(*g > 0.0)) {
        return Err(invalid("gamma_list", "thresholds must be positive"));
    }
    if gammas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("gamma_list", "thresholds must be strictly decreasing"));
    }
    let values = gammas
        .iter()
        .map(|&g| w_closed_form(&scenario.with_gamma(g), quad))
        .collect::<Result<Vec<_>>>()?;
    // grid stored in the scan order
    BandwidthCurve::new(gammas.to_vec(), values, "exact")
}
