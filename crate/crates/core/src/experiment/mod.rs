//! Orchestration behind the command-line tool: derivation reports,
//! scenario runs and comparison reports.

pub mod compare;
pub mod derivation;
pub mod run;
pub mod scenario;

pub use compare::{compare, Comparison, ComparisonRow};
pub use derivation::{derive, derive_boundary, parse_boundary_text, Derivation, DerivedBoundary};
pub use run::{simulate_files, BoundarySet, Mode, RunOutput};
pub use scenario::Scenario;

use crate::normal_form::NormalFormError;
use crate::solvers::SolverError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    /// Bad input, or a result that fails its acceptance check.
    #[error("{0}")]
    Validation(String),
    /// A derivation or solver failure.
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl ExperimentError {
    /// 0 success, 1 validation failure, 2 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Validation(_) | ExperimentError::Io(_) => 1,
            ExperimentError::Numerical(_) => 2,
        }
    }
}

impl From<SolverError> for ExperimentError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Config(m) => ExperimentError::Validation(m),
            other => ExperimentError::Numerical(other.to_string()),
        }
    }
}

impl From<NormalFormError> for ExperimentError {
    fn from(e: NormalFormError) -> Self {
        match e {
            NormalFormError::OrderTooLow(_) => ExperimentError::Validation(e.to_string()),
            other => ExperimentError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}
