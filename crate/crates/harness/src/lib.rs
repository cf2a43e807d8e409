//! Sweep driver for the decoupling workbench.
//!
//! An [`ExperimentConfig`] names an experiment kind, a set of seeds and one
//! or more sweep series. [`run`] evaluates every `(series, x, seed)` point in
//! a worker pool, aggregates the seeds by geometric mean, fits a power law
//! inside the fit window and evaluates the configured checks. Reports are
//! deterministic given the configuration, apart from the wall time.

pub mod analysis;
pub mod checks;
pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod run;

pub use compare::{compare, compare_series, SeriesComparison};
pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};
pub use report::{ScalingReport, SeriesReport};
pub use run::{run, run_with};
