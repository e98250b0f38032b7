//! Experiment harness and file formats for `ktrp-core`.
//!
//! The `ktrp` binary exposes the core schemes on files; [`experiment`] runs
//! the Monte Carlo studies behind the rate and bound checks.

pub mod experiment;
pub mod fit;
pub mod formats;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentKind, Summary};
pub use fit::{fit_loglog_slope, RateFit};
