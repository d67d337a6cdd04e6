//! Configuration, single runs, ε-sweeps and rate fitting.

pub mod checks;
pub mod config;
pub mod fit;
pub mod run;
pub mod sweep;

pub use config::{DtRule, RunConfig};
pub use fit::{fit_rate, RateFit};
pub use run::{run_single, FailureReport, RunOutput, RunSummary, Simulation};
pub use sweep::{sweep, CriterionFlag, SweepSummary};
