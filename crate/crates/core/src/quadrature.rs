//! Globally adaptive Gauss-Kronrod (7/15) quadrature, with transforms for
//! semi-infinite ranges, a polar form for radial planar integrals, and
//! iterated rules over disk and rectangle windows.
//!
//! Nodes never touch interval endpoints, so integrands with removable
//! singularities at an endpoint are integrated without special handling; any
//! endpoint value a caller needs (for a boundary term, say) is supplied by the
//! caller as an analytic limit.

use std::cell::Cell;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point2, Window};

/// Tolerances and subdivision budget for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(invalid("quadrature", "tolerances must be strictly positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(invalid("quadrature", "subdivision budget must be positive"));
        }
        Ok(())
    }

    /// Same budget, tolerances scaled by `factor`.
    pub fn tightened(&self, factor: f64) -> QuadratureSpec {
        QuadratureSpec {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            max_subdivisions: self.max_subdivisions,
        }
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub err_est: f64,
}

impl std::ops::Add for Quad {
    type Output = Quad;
    fn add(self, rhs: Quad) -> Quad {
        Quad {
            value: self.value + rhs.value,
            err_est: self.err_est + rhs.err_est,
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes plus the center
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_k = kronrod.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (j, slot) in fv.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        kronrod += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
        *slot = (f1, f2);
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (j, (f1, f2)) in fv.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = kronrod * half;
    let abs_k = abs_k * half.abs();
    let asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    // QUADPACK error scaling
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs_k > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_k);
    }
    Panel { a, b, value, err }
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quad> {
    spec.validate()?;
    if a == b {
        return Ok(Quad {
            value: 0.0,
            err_est: 0.0,
        });
    }
    let first = gk15(f, a, b);
    let mut value = first.value;
    let mut err = first.err;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 1;
    while err > spec.tolerance(value) || !value.is_finite() {
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Quadrature {
                value,
                err_est: err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("nonempty panel heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval cannot be split further in floating point
            return Err(Error::Quadrature {
                value,
                err_est: err,
                subdivisions,
            });
        }
        let left = gk15(f, worst.a, mid);
        let right = gk15(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        if subdivisions % 64 == 0 {
            // refresh running sums against drift
            value = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.err).sum();
        }
    }
    value = heap.iter().map(|p| p.value).sum();
    err = heap.iter().map(|p| p.err).sum();
    Ok(Quad {
        value,
        err_est: err,
    })
}

/// `int_a^b f(x) dx`. Either limit may be infinite.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quad> {
    if a.is_nan() || b.is_nan() {
        return Err(invalid("limits", "integration limits must not be NaN"));
    }
    if a > b {
        let q = integrate_1d(f, b, a, spec)?;
        return Ok(Quad {
            value: -q.value,
            err_est: q.err_est,
        });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&f, a, b, spec),
        (true, false) => {
            // x = a + t / (1 - t)
            let g = |t: f64| {
                let s = 1.0 - t;
                f(a + t / s) / (s * s)
            };
            adaptive(&g, 0.0, 1.0, spec)
        }
        (false, true) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                f(b - t / s) / (s * s)
            };
            adaptive(&g, 0.0, 1.0, spec)
        }
        (false, false) => {
            // fold x and -x onto [0, inf)
            let g = |t: f64| {
                let s = 1.0 - t;
                let x = t / s;
                (f(x) + f(-x)) / (s * s)
            };
            adaptive(&g, 0.0, 1.0, spec)
        }
    }
}

/// `int_a^b f` split at the interior `breaks` (sorted, inside `(a, b)`).
pub fn integrate_1d_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Quad> {
    let mut knots = vec![a];
    knots.extend(breaks.iter().copied().filter(|p| *p > a && *p < b));
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let pieces = (knots.len() - 1).max(1) as f64;
    let piece_spec = QuadratureSpec {
        abs_tol: spec.abs_tol / pieces,
        ..*spec
    };
    let mut total = Quad {
        value: 0.0,
        err_est: 0.0,
    };
    for w in knots.windows(2) {
        total = total + integrate_1d(&f, w[0], w[1], &piece_spec)?;
    }
    Ok(total)
}

/// `2 pi int_0^inf g(r) r dr`, mapping the tail onto `[0, 1]` with `u = 1/(1+r)`.
pub fn integrate_radial_2d<G: Fn(f64) -> f64>(g: G, spec: &QuadratureSpec) -> Result<f64> {
    integrate_radial_2d_breaks(g, &[], spec).map(|q| q.value)
}

/// Radial integral with known discontinuity radii; the last segment runs to infinity.
pub fn integrate_radial_2d_breaks<G: Fn(f64) -> f64>(
    g: G,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Quad> {
    let mut knots: Vec<f64> = breaks.iter().copied().filter(|r| *r > 0.0 && r.is_finite()).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let pieces = (knots.len() + 1) as f64;
    let piece_spec = QuadratureSpec {
        abs_tol: spec.abs_tol / (2.0 * PI * pieces),
        ..*spec
    };
    let integrand = |r: f64| g(r) * r;
    let mut total = Quad {
        value: 0.0,
        err_est: 0.0,
    };
    let mut lo = 0.0;
    for &k in &knots {
        total = total + adaptive(&integrand, lo, k, &piece_spec)?;
        lo = k;
    }
    // u = 1/(1 + r - lo) maps [lo, inf) onto (0, 1]
    let tail = |u: f64| {
        let r = lo + (1.0 - u) / u;
        integrand(r) / (u * u)
    };
    total = total + adaptive(&tail, 0.0, 1.0, &piece_spec)?;
    Ok(Quad {
        value: 2.0 * PI * total.value,
        err_est: 2.0 * PI * total.err_est,
    })
}

/// Symmetric difference quotient `(f(x+h) - f(x-h)) / 2h`.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Iterated integral of `f` over a window.
///
/// Disks are integrated in polar coordinates about their center, splitting
/// the radial range at `radial_breaks` (radii measured from the center).
pub fn integrate_window<F: Fn(Point2) -> f64>(
    f: F,
    window: &Window,
    radial_breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Quad> {
    window.validate()?;
    let inner_spec = spec.tightened(0.1);
    let failure: Cell<Option<Error>> = Cell::new(None);
    let record = |e: Error| {
        let prev = failure.take();
        failure.set(Some(prev.unwrap_or(e)));
        f64::NAN
    };
    let outer = match *window {
        Window::Disk { center, radius } => {
            let ring = |r: f64| {
                let angular = |t: f64| f(Point2::from_polar(r, t).translate(center.x, center.y));
                match integrate_1d(angular, 0.0, 2.0 * PI, &inner_spec) {
                    Ok(q) => q.value * r,
                    Err(e) => record(e),
                }
            };
            integrate_1d_breaks(ring, 0.0, radius, radial_breaks, spec)
        }
        Window::Rect {
            xmin,
            xmax,
            ymin,
            ymax,
        } => {
            let column = |x: f64| match integrate_1d(|y| f(Point2::new(x, y)), ymin, ymax, &inner_spec) {
                Ok(q) => q.value,
                Err(e) => record(e),
            };
            integrate_1d(column, xmin, xmax, spec)
        }
    };
    if let Some(e) = failure.take() {
        return Err(e);
    }
    outer
}
