use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("user {index} at ({x}, {y}) lies outside the service area")]
    UserOutOfArea { index: usize, x: f64, y: f64 },

    #[error("objective returned a non-finite value at {at}")]
    NonFinite { at: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unsupported user count: expected {expected}, got {got}")]
    DomainError { expected: usize, got: usize },

    #[error("users are not ordered by distance to the waveguide (y1² = {y1_sq} > y2² = {y2_sq})")]
    OrderingViolation { y1_sq: f64, y2_sq: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
