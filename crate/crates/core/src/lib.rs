//! Probabilistic routing schemes for the k-TSP and the traveling repairman
//! problem (TRP) on random Euclidean point sets.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function over immutable values; file formats, the experiment harness and
//! the CLI live in the `ktrp-lab` companion crate.
//!
//! Module map:
//!
//! * [`geom`], [`metrics`], [`density`], [`seed`]: points, routes, the tour /
//!   path / latency objectives, piecewise-constant densities and sampling.
//! * [`tsp`]: serpentine strip tour, 2-opt, Held-Karp oracle.
//! * [`ktsp`]: grid scheme for the k-TSP, exact oracle, rate and tail bounds.
//! * [`trp`]: density-ordered a priori TRP tour, exact latency oracle.
//! * [`fairness`]: service-probability maps and the randomized fairness LP.
//! * [`logistics`]: fleet sizing and same-day-delivery dispatch calculators.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod density;
pub mod error;
pub mod fairness;
pub mod geom;
pub mod ktsp;
pub mod logistics;
pub mod metrics;
pub mod seed;
pub mod trp;
pub mod tsp;

pub use density::{g_integral, GridDensity};
pub use error::{Error, Result};
pub use geom::{Point, PointSet, Route, Square};
pub use seed::RandomSeed;

/// Lower end of the known bracket for the BHH constant.
pub const BETA_TSP_MIN: f64 = 0.6250;
/// Upper end of the known bracket for the BHH constant.
pub const BETA_TSP_MAX: f64 = 0.9204;
