//! Truncated multivariate power series with exact or float coefficients.

mod monomial;
mod revert;
pub mod text;
mod truncated;
mod vector;

pub use monomial::{Monomial, Truncation, VarSet, MAX_VARS};
pub use revert::solve_implicit_system;
pub use truncated::TruncatedSeries;
pub use vector::SeriesVector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("series are over different variable sets: {left:?} vs {right:?}")]
    VarSetMismatch { left: Vec<String>, right: Vec<String> },
    #[error("replacement for `{0}` has a nonzero constant term")]
    NonzeroConstant(String),
    #[error("cannot revert: Jacobian with respect to the unknowns is singular at the origin")]
    SingularJacobian,
    #[error("expected {expected} entries, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
