//! Scenario files, single runs, sweeps and their on-disk artifacts.

pub mod error;
pub mod run;
pub mod scenario;
pub mod sweep;

pub use error::CliError;
pub use run::{run_scenario, simulate, Report};
pub use scenario::{parse_scenario, Scenario};
pub use sweep::{parse_sweep, run_sweep, SweepSpec};
