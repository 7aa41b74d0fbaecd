use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state amplitudes are not normalized: |alpha|^2 + |beta|^2 = {norm}")]
    Normalization { norm: f64 },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid covariance matrix: {0}")]
    Covariance(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid density matrix: {0}")]
    DensityMatrix(String),

    #[error("invalid pipeline configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("curve alignment error: {0}")]
    Alignment(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}
