//! Planar primitives and the two half-plane membership predicates behind
//! the product form of the Voronoi cell indicator.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{invalid, Result};

/// A location in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    /// Checked constructor; rejects NaN and infinite coordinates.
    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(invalid("point", format!("non-finite coordinates ({x}, {y})")));
        }
        Ok(Point2 { x, y })
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point2::new(radius * c, radius * s)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, other: Point2) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scale(self, c: f64) -> Point2 {
        Point2::new(self.x * c, self.y * c)
    }

    pub fn translate(self, dx: f64, dy: f64) -> Point2 {
        Point2::new(self.x + dx, self.y + dy)
    }

    /// Rotation about the origin by `angle` radians.
    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

/// `true` iff `x` lies in the closed half-plane of points at least as close to
/// `r0` as to `rk`. Ties count as inside.
#[inline]
pub fn in_half_plane_m0(x: Point2, r0: Point2, rk: Point2) -> bool {
    x.dist_sq(r0) <= x.dist_sq(rk)
}

/// `true` iff `r` lies on or outside the circle centered at `x` with radius `‖x‖`.
///
/// For every pair this agrees with `in_half_plane_m0(x, ORIGIN, r)`: the set of
/// competitor sites that leave `x` in the origin's cell is exactly the exterior
/// of that circle.
#[inline]
pub fn in_bc_exterior(r: Point2, x: Point2) -> bool {
    r.dist_sq(x) >= x.norm_sq()
}

/// Bounded observation region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    Disk {
        center: Point2,
        radius: f64,
    },
    Rect {
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
    },
}

impl Window {
    pub fn disk(center: Point2, radius: f64) -> Result<Self> {
        let w = Window::Disk { center, radius };
        w.validate()?;
        Ok(w)
    }

    /// Disk of the given radius centered at the origin.
    pub fn centered_disk(radius: f64) -> Result<Self> {
        Window::disk(Point2::ORIGIN, radius)
    }

    pub fn rect(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        let w = Window::Rect {
            xmin,
            xmax,
            ymin,
            ymax,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Window::Disk { center, radius } => {
                if !center.is_finite() {
                    return Err(invalid("window", "disk center must be finite"));
                }
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(invalid("window", format!("disk radius must be positive, got {radius}")));
                }
            }
            Window::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                let finite = [xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite());
                if !finite || xmax <= xmin || ymax <= ymin {
                    return Err(invalid(
                        "window",
                        format!("degenerate rectangle [{xmin}, {xmax}] x [{ymin}, {ymax}]"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        match *self {
            Window::Disk { radius, .. } => PI * radius * radius,
            Window::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => (xmax - xmin) * (ymax - ymin),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        match *self {
            Window::Disk { center, radius } => p.dist_sq(center) <= radius * radius,
            Window::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax,
        }
    }

    /// `(xmin, xmax, ymin, ymax)` of the smallest axis-aligned box containing the window.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match *self {
            Window::Disk { center, radius } => (
                center.x - radius,
                center.x + radius,
                center.y - radius,
                center.y + radius,
            ),
            Window::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => (xmin, xmax, ymin, ymax),
        }
    }

    /// Distance from an interior point to the window boundary (negative outside).
    pub fn distance_to_edge(&self, p: Point2) -> f64 {
        match *self {
            Window::Disk { center, radius } => radius - p.dist(center),
            Window::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => (p.x - xmin).min(xmax - p.x).min(p.y - ymin).min(ymax - p.y),
        }
    }

    /// One point uniformly distributed over the window.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        match *self {
            Window::Disk { center, radius } => {
                // sqrt transform gives an area-uniform radius
                let r = radius * rng.random::<f64>().sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                let p = Point2::from_polar(r, theta);
                p.translate(center.x, center.y)
            }
            Window::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => Point2::new(
                xmin + (xmax - xmin) * rng.random::<f64>(),
                ymin + (ymax - ymin) * rng.random::<f64>(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn half_plane_examples() {
        let o = Point2::ORIGIN;
        let rk = Point2::new(1.0, 0.0);
        assert!(in_half_plane_m0(o, o, rk));
        assert!(in_half_plane_m0(Point2::new(0.5, 0.0), o, rk));
        assert!(!in_half_plane_m0(Point2::new(0.9, 0.0), o, rk));
    }

    #[test]
    fn exterior_examples() {
        let x = Point2::new(1.0, 0.0);
        assert!(in_bc_exterior(Point2::new(10.0, 0.0), x));
        assert!(in_bc_exterior(Point2::new(2.0, 0.0), x));
        assert!(!in_bc_exterior(Point2::new(1.5, 0.2), x));
    }

    #[test]
    fn exterior_matches_half_plane_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut outside = 0usize;
        for _ in 0..1_000_000 {
            let r = Point2::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            let x = Point2::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            let a = in_bc_exterior(r, x);
            assert_eq!(a, in_half_plane_m0(x, Point2::ORIGIN, r), "r={r:?} x={x:?}");
            outside += a as usize;
        }
        // both outcomes must actually occur
        assert!(outside > 100_000 && outside < 999_000);
    }

    #[test]
    fn point_rejects_nan() {
        assert!(Point2::try_new(f64::NAN, 0.0).is_err());
        assert!(Point2::try_new(0.0, f64::INFINITY).is_err());
        assert_eq!(Point2::new(3.0, 4.0).norm(), 5.0);
        assert_eq!(Point2::ORIGIN.norm(), 0.0);
    }

    #[test]
    fn degenerate_windows_rejected() {
        assert!(Window::centered_disk(0.0).is_err());
        assert!(Window::centered_disk(-1.0).is_err());
        assert!(Window::rect(1.0, 1.0, 0.0, 2.0).is_err());
        assert!(Window::rect(0.0, 1.0, 3.0, 2.0).is_err());
        assert!((Window::rect(0.0, 3.0, 0.0, 4.0).unwrap().area() - 12.0).abs() < 1e-15);
    }

    #[test]
    fn acceptance_rate_matches_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for w in [
            Window::disk(Point2::new(0.3, -0.2), 1.7).unwrap(),
            Window::rect(-1.0, 2.0, 0.5, 1.5).unwrap(),
        ] {
            // bounding box strictly larger than the window
            let (x0, x1, y0, y1) = w.bounding_box();
            let (x0, x1, y0, y1) = (x0 - 0.5, x1 + 0.5, y0 - 0.5, y1 + 0.5);
            let p = w.area() / ((x1 - x0) * (y1 - y0));
            let n = 100_000;
            let hits = (0..n)
                .filter(|_| {
                    w.contains(Point2::new(rng.random_range(x0..x1), rng.random_range(y0..y1)))
                })
                .count();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let rate = hits as f64 / n as f64;
            assert!((rate - p).abs() < 3.0 * se, "rate {rate} vs {p}");
        }
    }

    #[test]
    fn uniform_samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = Window::disk(Point2::new(2.0, 1.0), 0.5).unwrap();
        for _ in 0..10_000 {
            assert!(w.contains(w.sample_uniform(&mut rng)));
        }
    }
}
