//! Method-of-lines solvers for the two-stream microscale system and the
//! single-field macroscale model, with field reconstruction and
//! interior-error metrics.

pub mod banded;
pub mod grid;
pub mod integrator;
pub mod macroscale;
pub mod metrics;
pub mod micro;
pub mod trajectory;

pub use grid::Grid1D;
pub use integrator::{integrate, OdeSystem, Stats, Tolerances};
pub use macroscale::{reconstruct_micro, solve_macroscale, solve_macroscale_observed, MacroBoundary, MacroProblem, MacroState};
pub use metrics::{interior_error, interior_error_sorted, InteriorError};
pub use micro::{solve_microscale, solve_microscale_observed, MicroProblem, MicroState, MicroTerms};
pub use trajectory::{snapshot_file_name, FieldTrajectory, Snapshot};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("step size collapsed to {h:e} at t = {t} (state max-norm {state_norm:e})")]
    StepCollapse { t: f64, h: f64, state_norm: f64 },
    #[error("{side} boundary Newton iteration failed at t = {t}: residual {residual:e} after {iterations} iterations")]
    BoundaryNewton { side: &'static str, t: f64, residual: f64, iterations: usize },
    /// The quadratic end relation has no real root for the current interior.
    #[error("{side} Robin relation has no real root at t = {t} (smallest residual {residual:e})")]
    BoundaryNoRoot { side: &'static str, t: f64, residual: f64 },
}

/// Grid, tolerances and output times shared by both solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub grid: Grid1D,
    pub tolerances: Tolerances,
    /// Ascending, positive; the last one is the end time.
    pub snapshots: Vec<f64>,
}

impl SolveConfig {
    pub fn new(grid: Grid1D, tolerances: Tolerances, snapshots: Vec<f64>) -> Result<SolveConfig, SolverError> {
        let cfg = SolveConfig { grid, tolerances, snapshots };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.tolerances.validate()?;
        match self.snapshots.first() {
            None => return Err(SolverError::Config("at least one snapshot time is required".into())),
            Some(&t) if !(t > 0.0 && t.is_finite()) => {
                return Err(SolverError::Config(format!("snapshot times must be positive, got {t}")))
            }
            _ => {}
        }
        if self.snapshots.windows(2).any(|w| !(w[1] > w[0] && w[1].is_finite())) {
            return Err(SolverError::Config("snapshot times must be strictly ascending".into()));
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        *self.snapshots.last().expect("validated")
    }
}
