//! Error type shared by all simulation modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("equilibrium solve did not converge after {iters} iterations (residual {residual:.3e})")]
    EquilibriumNoConverge { iters: usize, residual: f64 },

    #[error("crystal is not stable: smallest Hessian eigenvalue {0:.6e}")]
    UnstableCrystal(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("drive correction out of range: lambda_c = {0:.6e} (|lambda_c| must be >= 0.05)")]
    DriveCorrection(f64),

    #[error("tone amplitude solve failed: {0}")]
    ToneSolve(String),

    #[error("numerical guard tripped: {0}")]
    Numerics(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
