//! Replication plumbing: per-replication random substreams and the summary
//! statistic every Monte Carlo estimator returns.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Generator type used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Multiplier on the standard error for the default acceptance band.
pub const DEFAULT_Z: f64 = 3.0;
/// Two-sided coverage of a normal +-3 SE interval.
pub const DEFAULT_CONFIDENCE: f64 = 0.997;

/// Independent generator for replication `rep` of an experiment seeded with `seed`.
///
/// ChaCha streams are disjoint, so the result depends only on `(seed, rep)` and
/// never on which thread runs the replication.
pub fn substream(seed: u64, rep: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Runs `n_rep` replications in parallel and returns their outputs in replication order.
pub fn replicate<T, F>(n_rep: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut SimRng) -> T + Sync,
{
    (0..n_rep as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(seed, rep);
            f(rep, &mut rng)
        })
        .collect()
}

/// Monte Carlo summary: sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_replications: usize,
    pub confidence_level: f64,
}

impl Estimate {
    /// Mean and standard error (sample standard deviation over `sqrt(n)`).
    ///
    /// Panics on an empty sample.
    pub fn from_samples(samples: &[f64]) -> Estimate {
        assert!(!samples.is_empty(), "estimate needs at least one replication");
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = samples.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr,
            n_replications: n,
            confidence_level: DEFAULT_CONFIDENCE,
        }
    }

    /// Interval `mean +- DEFAULT_Z * stderr`.
    pub fn interval(&self) -> (f64, f64) {
        (
            self.mean - DEFAULT_Z * self.stderr,
            self.mean + DEFAULT_Z * self.stderr,
        )
    }

    /// `|mean - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }

    /// Distance from `target` in units of standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target) / self.stderr
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a: u64 = substream(7, 3).random();
        let b: u64 = substream(7, 3).random();
        let c: u64 = substream(7, 4).random();
        let d: u64 = substream(8, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn replicate_is_independent_of_thread_count() {
        let run = || replicate(500, 42, |_, rng| rng.random::<f64>());
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run);
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(run);
        assert_eq!(serial, parallel);
    }

    #[test]
    fn estimate_of_known_sample() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // sd = sqrt(5/3)
        assert!((e.stderr - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert!(e.within(2.5, 0.0));
        let single = Estimate::from_samples(&[3.0]);
        assert_eq!(single.stderr, 0.0);
        assert_eq!(single.z_score(3.0), 0.0);
    }
}
