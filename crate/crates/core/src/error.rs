use thiserror::Error;

/// Library-level error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} outside {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian within tolerance {tol}")]
    NotHermitian { tol: f64 },

    #[error("matrix is not a density matrix: {reason}")]
    NotDensity { reason: String },

    #[error("state is not of product-plus-entangled form: {reason}")]
    NotFamilyForm { reason: String },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("distillation rate is not positive (F = {fidelity})")]
    NonPositiveRate { fidelity: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
