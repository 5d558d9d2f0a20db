use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("outside the domain: {0}")]
    OutOfDomain(String),
    #[error("{method} did not converge after {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
        target: f64,
    },
    #[error("numerical instability: {0}")]
    Unstable(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("seed {seed}, scale {scale}: {source}")]
    Cell {
        seed: u64,
        scale: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
