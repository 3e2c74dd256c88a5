use thiserror::Error;

/// Errors raised by field evaluation, integration and bound extraction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrbError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("observation point coincides with the source (r = 0)")]
    DegenerateGeometry,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integrand is not finite at (y = {y}, z = {z})")]
    NonFinite { y: f64, z: f64 },

    #[error("source is off the central perpendicular line (y_C = {y_c}, z_C = {z_c})")]
    NotCpl { y_c: f64, z_c: f64 },

    #[error(
        "Fisher matrix is singular or ill-conditioned (condition number {condition:.3e}); \
         least-informed direction is {direction}"
    )]
    Singular { condition: f64, direction: String },
}

pub type Result<T> = std::result::Result<T, CrbError>;
