//! Continuous problem data: grid, coefficient, absorption, initial data and
//! numerical hypothesis validation.

mod absorption;
mod coefficient;
mod grid;
pub(crate) mod hypotheses;
mod initial;

pub use absorption::AbsorptionSpec;
pub use coefficient::{eval_coefficient, CoefficientSpec};
pub use grid::{ScalarField, SpatialGrid};
pub use hypotheses::{
    mu_infinity, omega_d, validate_hypotheses, HypothesisReport, IntegralEstimate, IntegralStatus,
    TheoremFlags,
};
pub use initial::InitialData;

/// Errors produced while assembling or validating problem data.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("cell center x = {center} coincides with a zero of d at x = {zero}")]
    CenterOnZero { center: f64, zero: f64 },
    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error("field length {got} does not match grid with {expected} cells")]
    FieldLengthMismatch { got: usize, expected: usize },
    #[error("field contains a non-finite value at cell {index}")]
    NonFiniteField { index: usize },
    #[error("integral of 1/d is unresolved or divergent; cannot form the limit amplitude")]
    UnresolvedInverseIntegral,
    #[error("delta = {0} outside (0, |domain|]")]
    InvalidDelta(f64),
}
