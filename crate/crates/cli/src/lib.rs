//! Experiment harness for `arq-core`: configuration files, single runs and
//! sweeps, CSV output, Lipschitz estimation and exact certificate checks.

pub mod error;
pub mod lipschitz;
pub mod reference;
pub mod report;
pub mod run;
pub mod seeds;
pub mod spec;
pub mod verify;

pub use error::{HarnessError, Result};
pub use run::{run_and_analyze, run_solve, run_sweep, RunRecord, SweepSummary};
pub use spec::ExperimentSpec;
pub use verify::{verify_certificate, OrderCheck, OrderStatus};
