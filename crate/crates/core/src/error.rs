use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid amplitude: {0}")]
    InvalidAmplitude(String),

    #[error("supports overlap: centers {k1} and {k2} are closer than the bandwidth {delta}")]
    OverlappingSupports { k1: f64, k2: f64, delta: f64 },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("window half-width must be non-negative, got {0}")]
    NegativeWindow(f64),

    #[error("states are not orthogonal: |<psi1|psi2>| = {0:e}")]
    NotOrthogonal(f64),

    #[error("state is not normalized: norm^2 = {0}")]
    NotNormalized(f64),

    #[error("density matrix trace {0} differs from 1")]
    Trace(f64),

    #[error("probability out of range: {0}")]
    Probability(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("protocol order violated: {0}")]
    ProtocolOrder(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::Probability(p))
    }
}
