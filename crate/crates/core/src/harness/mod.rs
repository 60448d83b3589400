//! Experiment front end: configuration, replicate orchestration, CSV and
//! JSON output, and the comparison pipelines behind the command-line tool.

pub mod compare;
pub mod config;
pub mod csv;
pub mod profile;
pub mod simulate;

pub use compare::{cmd_compare, compare, ComparisonReport};
pub use config::{Band, Comparison, ExperimentConfig, InitialSpec, Mode, Overrides, RateSpec, Thresholds};
pub use profile::{cmd_edges, cmd_figure1, cmd_profile, ProfileColumn, ProfileSpec};
pub use simulate::{cmd_simulate, simulate, workers_from_env, SimulationOutput, WORKERS_ENV};

use crate::error::Error;

/// Process exit status of the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    ComparisonFailure = 1,
    ConfigError = 2,
    MissingData = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Missing inputs map to [`ExitStatus::MissingData`]; every other error
    /// is reported as a configuration problem.
    pub fn for_error(err: &Error) -> Self {
        match err {
            Error::MissingData(_) => ExitStatus::MissingData,
            _ => ExitStatus::ConfigError,
        }
    }

    /// [`ExitStatus::ComparisonFailure`] if any gated row failed.
    pub fn for_reports(rows: &[ComparisonReport]) -> Self {
        if rows.iter().any(ComparisonReport::is_failure) {
            ExitStatus::ComparisonFailure
        } else {
            ExitStatus::Ok
        }
    }
}
