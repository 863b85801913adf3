//! Homogeneous Poisson point processes on a bounded window.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Result};
use crate::geometry::{Point2, Window};
use crate::mc::SimRng;
use crate::report::fmt_g;

/// One realization of a homogeneous PPP. `(intensity, window, seed)` determine `points`.
#[derive(Debug, Clone, PartialEq)]
pub struct PppSample {
    pub points: Vec<Point2>,
    pub intensity: f64,
    pub window: Window,
    pub seed: u64,
}

impl PppSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes the `x,y` point dump.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,y")?;
        for p in &self.points {
            writeln!(out, "{},{}", fmt_g(p.x), fmt_g(p.y))?;
        }
        Ok(())
    }
}

pub(crate) fn check_intensity(intensity: f64) -> Result<()> {
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(invalid("intensity", format!("must be positive and finite, got {intensity}")));
    }
    Ok(())
}

/// Draws a PPP realization from a fresh generator seeded with `seed`.
pub fn sample_ppp(intensity: f64, window: Window, seed: u64) -> Result<PppSample> {
    let mut rng = SimRng::seed_from_u64(seed);
    let points = sample_points(intensity, &window, &mut rng)?;
    Ok(PppSample {
        points,
        intensity,
        window,
        seed,
    })
}

/// Poisson(intensity * area) count, then that many i.i.d. uniform points.
pub fn sample_points<R: Rng + ?Sized>(
    intensity: f64,
    window: &Window,
    rng: &mut R,
) -> Result<Vec<Point2>> {
    check_intensity(intensity)?;
    window.validate()?;
    let n = poisson_count(intensity * window.area(), rng);
    Ok((0..n).map(|_| window.sample_uniform(rng)).collect())
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    // mean is positive and finite here, so construction cannot fail
    let dist = Poisson::new(mean).expect("valid Poisson mean");
    dist.sample(rng) as usize
}

/// `intensity * area`.
pub fn expected_count(intensity: f64, window: &Window) -> f64 {
    intensity * window.area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{replicate, Estimate};
    use std::f64::consts::PI;

    #[test]
    fn expected_count_examples() {
        let rect = Window::rect(0.0, 3.0, 0.0, 4.0).unwrap();
        assert!((expected_count(2.0, &rect) - 24.0).abs() < 1e-12);
        let unit = Window::centered_disk(1.0).unwrap();
        assert!((expected_count(1.0, &unit) - PI).abs() < 1e-15);
        let tiny = Window::centered_disk(1e-9).unwrap();
        assert!(expected_count(1.0, &tiny) < 1e-17);
    }

    #[test]
    fn rejects_bad_inputs() {
        let w = Window::centered_disk(1.0).unwrap();
        assert!(sample_ppp(0.0, w, 1).is_err());
        assert!(sample_ppp(-1.0, w, 1).is_err());
        assert!(sample_ppp(f64::NAN, w, 1).is_err());
        let bad = Window::Disk {
            center: Point2::ORIGIN,
            radius: 0.0,
        };
        assert!(sample_ppp(1.0, bad, 1).is_err());
    }

    #[test]
    fn replay_is_bit_identical() {
        let w = Window::centered_disk(3.0).unwrap();
        let a = sample_ppp(2.0, w, 99).unwrap();
        let b = sample_ppp(2.0, w, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.points.iter().all(|p| w.contains(*p)));
        let c = sample_ppp(2.0, w, 100).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn count_mean_and_variance_are_poisson() {
        let w = Window::centered_disk((1.0 / PI).sqrt()).unwrap();
        let n = 100_000;
        let counts: Vec<f64> = replicate(n, 3, |_, rng| {
            sample_points(1.0, &w, rng).unwrap().len() as f64
        });
        let est = Estimate::from_samples(&counts);
        assert!(est.within(1.0, 3.0), "mean {est:?}");
        // variance estimator: SE of (N - mean)^2 terms
        let sq: Vec<f64> = counts.iter().map(|c| (c - est.mean).powi(2)).collect();
        let var = Estimate::from_samples(&sq);
        assert!(var.within(1.0, 3.0), "variance {var:?}");
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let s = sample_ppp(1.0, Window::centered_disk(2.0).unwrap(), 4).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y"));
        assert_eq!(lines.count(), s.len());
    }
}
