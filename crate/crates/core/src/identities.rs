//! Sum-product expectations over Poisson points and over the UEs of the
//! typical cell, each as a closed form next to a Monte Carlo estimator.

use std::f64::consts::PI;
use std::io::{self, Write};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point2, Window};
use crate::mc::{replicate, Estimate, DEFAULT_Z};
use crate::ppp::{check_intensity, sample_points};
use crate::quadrature::{integrate_1d, integrate_radial_2d_breaks, integrate_window, QuadratureSpec};
use crate::report::fmt_g;
use crate::voronoi::{check_flagged, edge_margin, TypicalCell, DEFAULT_WINDOW_FACTOR};

/// Minimum replication count of the identity estimators.
pub const MIN_IDENTITY_REPLICATIONS: usize = 100;

/// Real-valued function on the plane.
pub trait ScalarField: Sync {
    fn eval(&self, x: Point2) -> f64;

    /// Region outside which the field takes its off-window value
    /// (1 for product fields, 0 for sum fields). `None` means unbounded.
    fn support(&self) -> Option<Window> {
        None
    }

    /// Radii (from the origin) where the field is discontinuous.
    fn radial_breaks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Depends on `|x|` only.
    fn is_radial(&self) -> bool {
        false
    }

    /// Exact integral over a disk of this radius centered at the origin.
    fn disk_integral(&self, _radius: f64) -> Option<f64> {
        None
    }

    /// Exact `int f(x) exp(-beta |x|^2) dx` over the plane.
    fn gaussian_weighted_integral(&self, _beta: f64) -> Option<f64> {
        None
    }
}

/// Radial test fields with known integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestField {
    Constant(f64),
    /// `inside` on the closed annulus `inner <= |x| <= outer`, `outside` elsewhere.
    /// `inner = 0` gives a disk indicator.
    Ring {
        inner: f64,
        outer: f64,
        inside: f64,
        outside: f64,
    },
    /// `amplitude * exp(-alpha |x|^2)`.
    Gaussian { amplitude: f64, alpha: f64 },
    /// `1 - depth * exp(-alpha |x|^2)`, a product field that tends to 1.
    GaussianDip { depth: f64, alpha: f64 },
}

impl TestField {
    pub fn disk(radius: f64, inside: f64, outside: f64) -> TestField {
        TestField::Ring {
            inner: 0.0,
            outer: radius,
            inside,
            outside,
        }
    }

    pub fn gaussian(amplitude: f64, alpha: f64) -> TestField {
        TestField::Gaussian { amplitude, alpha }
    }

    fn profile(&self, r: f64) -> f64 {
        match *self {
            TestField::Constant(c) => c,
            TestField::Ring {
                inner,
                outer,
                inside,
                outside,
            } => {
                if r >= inner && r <= outer {
                    inside
                } else {
                    outside
                }
            }
            TestField::Gaussian { amplitude, alpha } => amplitude * (-alpha * r * r).exp(),
            TestField::GaussianDip { depth, alpha } => 1.0 - depth * (-alpha * r * r).exp(),
        }
    }
}

/// `int_{|x| <= r} exp(-beta |x|^2) dx`.
fn gaussian_disk(beta: f64, r: f64) -> f64 {
    if beta == 0.0 {
        PI * r * r
    } else {
        -PI / beta * (-beta * r * r).exp_m1()
    }
}

impl ScalarField for TestField {
    fn eval(&self, x: Point2) -> f64 {
        self.profile(x.norm())
    }

    fn support(&self) -> Option<Window> {
        match *self {
            TestField::Ring { outer, .. } => Window::centered_disk(outer).ok(),
            _ => None,
        }
    }

    fn radial_breaks(&self) -> Vec<f64> {
        match *self {
            TestField::Ring { inner, outer, .. } if inner > 0.0 => vec![inner, outer],
            TestField::Ring { outer, .. } => vec![outer],
            _ => Vec::new(),
        }
    }

    fn is_radial(&self) -> bool {
        true
    }

    fn disk_integral(&self, radius: f64) -> Option<f64> {
        Some(match *self {
            TestField::Constant(c) => c * PI * radius * radius,
            TestField::Ring {
                inner,
                outer,
                inside,
                outside,
            } => {
                let a = inner.min(radius);
                let b = outer.min(radius);
                let ring = PI * (b * b - a * a);
                inside * ring + outside * (PI * radius * radius - ring)
            }
            TestField::Gaussian { amplitude, alpha } => amplitude * gaussian_disk(alpha, radius),
            TestField::GaussianDip { depth, alpha } => {
                PI * radius * radius - depth * gaussian_disk(alpha, radius)
            }
        })
    }

    fn gaussian_weighted_integral(&self, beta: f64) -> Option<f64> {
        if !(beta > 0.0) {
            return None;
        }
        let full = PI / beta;
        Some(match *self {
            TestField::Constant(c) => c * full,
            TestField::Ring {
                inner,
                outer,
                inside,
                outside,
            } => {
                let ring = gaussian_disk(beta, outer) - gaussian_disk(beta, inner);
                inside * ring + outside * (full - ring)
            }
            TestField::Gaussian { amplitude, alpha } => amplitude * PI / (alpha + beta),
            TestField::GaussianDip { depth, alpha } => full - depth * PI / (alpha + beta),
        })
    }
}

fn merged_breaks<P: ScalarField + ?Sized, S: ScalarField + ?Sized>(p: &P, s: &S) -> Vec<f64> {
    let mut b = p.radial_breaks();
    b.extend(s.radial_breaks());
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

fn checked_eval<F: ScalarField + ?Sized>(f: &F, x: Point2) -> Result<f64> {
    let v = f.eval(x);
    if !v.is_finite() {
        return Err(Error::FieldEvaluation { x: x.x, y: x.y, value: v });
    }
    Ok(v)
}

/// Product of field values over `points`, switching to log space when a
/// factor drops below `1e-3`. An exact zero returns 0 immediately.
pub fn stable_product<F: ScalarField + ?Sized>(field: &F, points: &[Point2]) -> Result<f64> {
    let mut direct = 1.0;
    let mut log_abs = 0.0;
    let mut negative = false;
    let mut use_log = false;
    for x in points {
        let v = checked_eval(field, *x)?;
        if v == 0.0 {
            return Ok(0.0);
        }
        use_log |= v.abs() < 1e-3;
        direct *= v;
        log_abs += v.abs().ln();
        negative ^= v < 0.0;
    }
    if !use_log {
        return Ok(direct);
    }
    let m = log_abs.exp();
    Ok(if negative { -m } else { m })
}

/// Closed form of `E[prod P(x_k) * sum S(x_k)]` for a PPP on `window`:
/// `lambda int_A S P * exp(lambda int_A (P - 1))`.
pub fn lemma1_closed_form<P, S>(
    p: &P,
    s: &S,
    intensity: f64,
    window: &Window,
    quad: &QuadratureSpec,
) -> Result<f64>
where
    P: ScalarField + ?Sized,
    S: ScalarField + ?Sized,
{
    check_intensity(intensity)?;
    quad.validate()?;
    let breaks = merged_breaks(p, s);
    let sp = integrate_window(|x| s.eval(x) * p.eval(x), window, &breaks, quad)?;
    let deficit = integrate_window(|x| p.eval(x) - 1.0, window, &breaks, quad)?;
    Ok(intensity * sp.value * (intensity * deficit.value).exp())
}

/// Monte Carlo estimate of `E[prod P(x_k) * sum S(x_k)]`; an empty sample
/// contributes product 1 and sum 0.
pub fn lemma1_monte_carlo<P, S>(
    p: &P,
    s: &S,
    intensity: f64,
    window: &Window,
    n_rep: usize,
    seed: u64,
) -> Result<Estimate>
where
    P: ScalarField + ?Sized,
    S: ScalarField + ?Sized,
{
    check_intensity(intensity)?;
    window.validate()?;
    check_reps(n_rep)?;
    let vals = replicate(n_rep, seed, |_, rng| -> Result<f64> {
        let pts = sample_points(intensity, window, rng)?;
        let mut sum = 0.0;
        for x in &pts {
            sum += checked_eval(s, *x)?;
        }
        if sum == 0.0 {
            return Ok(0.0);
        }
        Ok(stable_product(p, &pts)? * sum)
    });
    collect(vals)
}

fn check_reps(n_rep: usize) -> Result<()> {
    if n_rep < MIN_IDENTITY_REPLICATIONS {
        return Err(invalid(
            "n_rep",
            format!("need at least {MIN_IDENTITY_REPLICATIONS} replications, got {n_rep}"),
        ));
    }
    Ok(())
}

fn collect(vals: Vec<Result<f64>>) -> Result<Estimate> {
    let v: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&v))
}

fn check_pair(lambda1: f64, lambda2: f64) -> Result<()> {
    check_intensity(lambda1).map_err(|_| invalid("lambda1", "must be positive"))?;
    check_intensity(lambda2).map_err(|_| invalid("lambda2", "must be positive"))?;
    Ok(())
}

/// `2 pi int_0^inf Pbar(r) exp(-pi lambda2 r^2) r dr` with `Pbar` the angular
/// average of `field`.
fn kernel_integral<F, G>(field: &F, map: G, lambda2: f64, quad: &QuadratureSpec) -> Result<f64>
where
    F: ScalarField + ?Sized,
    G: Fn(f64) -> f64,
{
    let kernel = |r: f64| (-PI * lambda2 * r * r).exp();
    let breaks = field.radial_breaks();
    let q = if field.is_radial() {
        integrate_radial_2d_breaks(|r| map(field.eval(Point2::new(r, 0.0))) * kernel(r), &breaks, quad)?
    } else {
        let inner = quad.tightened(0.1);
        let failure = std::cell::Cell::new(None);
        let avg = |r: f64| {
            match integrate_1d(|t| map(field.eval(Point2::from_polar(r, t))), 0.0, 2.0 * PI, &inner) {
                Ok(q) => q.value / (2.0 * PI),
                Err(e) => {
                    failure.set(Some(e));
                    f64::NAN
                }
            }
        };
        let out = integrate_radial_2d_breaks(|r| avg(r) * kernel(r), &breaks, quad);
        if let Some(e) = failure.take() {
            return Err(e);
        }
        out?
    };
    Ok(q.value)
}

/// Expected sum of `P` over the UEs of the typical cell:
/// `lambda1 int P(x) exp(-pi lambda2 |x|^2) dx`.
pub fn remark_sum_closed_form<F: ScalarField + ?Sized>(
    p: &F,
    lambda1: f64,
    lambda2: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_pair(lambda1, lambda2)?;
    quad.validate()?;
    Ok(lambda1 * kernel_integral(p, |v| v, lambda2, quad)?)
}

/// Product counterpart: `exp(lambda1 int (P(x) - 1) exp(-pi lambda2 |x|^2) dx)`.
///
/// The exponent is finite for every bounded `P`; a `-inf` exponent returns 0.
pub fn remark_product_closed_form<F: ScalarField + ?Sized>(
    p: &F,
    lambda1: f64,
    lambda2: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_pair(lambda1, lambda2)?;
    quad.validate()?;
    let deficit = kernel_integral(p, |v| v - 1.0, lambda2, quad)?;
    Ok((lambda1 * deficit).exp())
}

/// Disk of radius `8/sqrt(lambda2)` centered at the origin.
pub fn remark_default_window(lambda2: f64) -> Result<Window> {
    check_intensity(lambda2)?;
    Window::centered_disk(DEFAULT_WINDOW_FACTOR / lambda2.sqrt())
}

fn remark_mc<F, A>(
    p: &F,
    lambda1: f64,
    lambda2: f64,
    window: &Window,
    n_rep: usize,
    seed: u64,
    reduce: A,
) -> Result<Estimate>
where
    F: ScalarField + ?Sized,
    A: Fn(&F, &[Point2]) -> Result<f64> + Sync,
{
    check_pair(lambda1, lambda2)?;
    window.validate()?;
    check_reps(n_rep)?;
    if !window.contains(Point2::ORIGIN) {
        return Err(invalid("window", "must contain the origin"));
    }
    let margin = edge_margin(lambda2);
    let reps = replicate(n_rep, seed, |_, rng| -> Result<(f64, bool)> {
        let bs = sample_points(lambda2, window, rng)?;
        let ues = sample_points(lambda1, window, rng)?;
        let cell = TypicalCell::from_others(bs);
        let inside: Vec<Point2> = ues.into_iter().filter(|u| cell.contains(*u)).collect();
        let near_edge = inside.iter().any(|u| window.distance_to_edge(*u) < margin);
        Ok((reduce(p, &inside)?, near_edge))
    });
    let mut vals = Vec::with_capacity(n_rep);
    let mut flagged = 0;
    for r in reps {
        let (v, near_edge) = r?;
        vals.push(v);
        flagged += near_edge as usize;
    }
    check_flagged(flagged, n_rep)?;
    Ok(Estimate::from_samples(&vals))
}

/// Monte Carlo estimate of the expected sum of `P` over UE points (intensity
/// `lambda1`) in the cell of a BS at the origin (other BSs at `lambda2`).
pub fn remark_sum_monte_carlo<F: ScalarField + ?Sized>(
    p: &F,
    lambda1: f64,
    lambda2: f64,
    window: &Window,
    n_rep: usize,
    seed: u64,
) -> Result<Estimate> {
    remark_mc(p, lambda1, lambda2, window, n_rep, seed, |f, pts| {
        pts.iter().try_fold(0.0, |acc, x| Ok(acc + checked_eval(f, *x)?))
    })
}

/// Monte Carlo estimate of the expected product of `P` over the UE points of
/// the typical cell; an empty cell contributes 1.
pub fn remark_product_monte_carlo<F: ScalarField + ?Sized>(
    p: &F,
    lambda1: f64,
    lambda2: f64,
    window: &Window,
    n_rep: usize,
    seed: u64,
) -> Result<Estimate> {
    remark_mc(p, lambda1, lambda2, window, n_rep, seed, |f, pts| stable_product(f, pts))
}

/// Which identity a check exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    Lemma1,
    RemarkSum,
    RemarkProduct,
}

impl Identity {
    pub const ALL: [Identity; 3] = [Identity::Lemma1, Identity::RemarkSum, Identity::RemarkProduct];

    pub fn name(&self) -> &'static str {
        match self {
            Identity::Lemma1 => "lemma1",
            Identity::RemarkSum => "remark-sum",
            Identity::RemarkProduct => "remark-product",
        }
    }

    pub fn parse(s: &str) -> Result<Identity> {
        Identity::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| invalid("identity", format!("unknown identity {s:?}")))
    }
}

/// Built-in test-field suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSet {
    Constant,
    Disk,
    Gaussian,
}

impl FieldSet {
    pub const ALL: [FieldSet; 3] = [FieldSet::Constant, FieldSet::Disk, FieldSet::Gaussian];

    pub fn name(&self) -> &'static str {
        match self {
            FieldSet::Constant => "constant",
            FieldSet::Disk => "disk",
            FieldSet::Gaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Result<FieldSet> {
        FieldSet::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| invalid("field_set", format!("unknown field set {s:?}")))
    }

    /// `(P, S)` pair used with the PPP sum-product identity.
    pub fn lemma1_fields(&self) -> (TestField, TestField) {
        match self {
            FieldSet::Constant => (TestField::Constant(0.9), TestField::Constant(2.0)),
            FieldSet::Disk => (TestField::disk(1.0, 0.5, 1.0), TestField::disk(1.5, 1.0, 0.2)),
            FieldSet::Gaussian => (TestField::gaussian(1.0, 1.0), TestField::gaussian(1.0, 1.0)),
        }
    }

    /// Field summed over the typical cell.
    pub fn sum_field(&self) -> TestField {
        match self {
            FieldSet::Constant => TestField::Constant(1.0),
            FieldSet::Disk => TestField::disk(0.5, 1.0, 0.0),
            FieldSet::Gaussian => TestField::gaussian(1.0, PI),
        }
    }

    /// Field multiplied over the typical cell, values in (0, 1].
    pub fn product_field(&self) -> TestField {
        match self {
            FieldSet::Constant => TestField::Constant(0.95),
            FieldSet::Disk => TestField::disk(0.5, 0.5, 1.0),
            FieldSet::Gaussian => TestField::GaussianDip { depth: 0.5, alpha: PI },
        }
    }
}

/// Parameters shared by the identity checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityConfig {
    /// PPP intensity for the sum-product identity.
    pub intensity: f64,
    /// Observation window for the sum-product identity.
    pub window: Window,
    /// UE intensity for the typical-cell identities.
    pub lambda1: f64,
    /// BS intensity for the typical-cell identities.
    pub lambda2: f64,
    pub quad: QuadratureSpec,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig {
            intensity: 1.0,
            window: Window::Disk {
                center: Point2::ORIGIN,
                radius: 2.0,
            },
            lambda1: 10.0,
            lambda2: 1.0,
            quad: QuadratureSpec::default(),
        }
    }
}

/// One closed-form versus Monte Carlo comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub identity: Identity,
    pub field_set: FieldSet,
    pub closed_form: f64,
    pub estimate: Estimate,
}

impl IdentityCheck {
    /// `|closed_form - mean| <= 3 stderr`.
    pub fn pass(&self) -> bool {
        self.estimate.within(self.closed_form, DEFAULT_Z)
    }
}

pub fn verify_identity(
    identity: Identity,
    field_set: FieldSet,
    cfg: &IdentityConfig,
    n_rep: usize,
    seed: u64,
) -> Result<IdentityCheck> {
    let (closed_form, estimate) = match identity {
        Identity::Lemma1 => {
            let (p, s) = field_set.lemma1_fields();
            (
                lemma1_closed_form(&p, &s, cfg.intensity, &cfg.window, &cfg.quad)?,
                lemma1_monte_carlo(&p, &s, cfg.intensity, &cfg.window, n_rep, seed)?,
            )
        }
        Identity::RemarkSum => {
            let p = field_set.sum_field();
            let w = remark_default_window(cfg.lambda2)?;
            (
                remark_sum_closed_form(&p, cfg.lambda1, cfg.lambda2, &cfg.quad)?,
                remark_sum_monte_carlo(&p, cfg.lambda1, cfg.lambda2, &w, n_rep, seed)?,
            )
        }
        Identity::RemarkProduct => {
            let p = field_set.product_field();
            let w = remark_default_window(cfg.lambda2)?;
            (
                remark_product_closed_form(&p, cfg.lambda1, cfg.lambda2, &cfg.quad)?,
                remark_product_monte_carlo(&p, cfg.lambda1, cfg.lambda2, &w, n_rep, seed)?,
            )
        }
    };
    Ok(IdentityCheck {
        identity,
        field_set,
        closed_form,
        estimate,
    })
}

pub fn write_checks_csv<W: Write>(checks: &[IdentityCheck], mut out: W) -> io::Result<()> {
    writeln!(out, "identity,field_set,closed_form,mc_mean,mc_stderr,n_rep,pass")?;
    for c in checks {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.identity.name(),
            c.field_set.name(),
            fmt_g(c.closed_form),
            fmt_g(c.estimate.mean),
            fmt_g(c.estimate.stderr),
            c.estimate.n_replications,
            c.pass()
        )?;
    }
    Ok(())
}
