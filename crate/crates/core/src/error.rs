use thiserror::Error;

/// Errors produced by the refund-lab library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("distribution mean {actual} differs from the required mean {expected}")]
    MeanMismatch { expected: f64, actual: f64 },

    #[error("distribution masses sum to {0}, expected 1")]
    MassMismatch(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("interval [{a}, {b}] is out of order or outside [0, 1]")]
    IntervalOrder { a: f64, b: f64 },

    #[error(
        "random discounting needs gamma > gamma_bar (gamma = {gamma}, gamma_bar = {gamma_bar})"
    )]
    EmptySegment { gamma: f64, gamma_bar: f64 },

    #[error("invalid offer: {0}")]
    InvalidOffer(String),

    #[error("invalid pricing policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("allocation grid does not match the distribution support: {0}")]
    GridMismatch(String),

    #[error("mean {mu} lies outside the grid range [{lo}, {hi}]")]
    Infeasible { mu: f64, lo: f64, hi: f64 },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        domain,
    }
}
