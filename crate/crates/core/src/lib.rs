//! Poisson point process and Poisson-Voronoi identities, each closed form
//! paired with an independent Monte Carlo estimator, applied to bandwidth
//! consumption in interference-limited cellular downlinks.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod identities;
pub mod mc;
pub mod netsim;
pub mod ppp;
pub mod quadrature;
pub mod report;
pub mod voronoi;

pub use error::{Error, Result};
pub use geometry::{Point2, Window};
pub use mc::Estimate;
