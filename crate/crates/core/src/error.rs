use thiserror::Error;

/// Errors raised across the pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time {t} is outside the available range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("invalid driving function: {0}")]
    InvalidDriver(String),

    #[error("invalid quadrature configuration: {0}")]
    InvalidQuadrature(String),

    #[error("invalid constants: {0}")]
    InvalidConstants(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid band: {0}")]
    InvalidBand(String),

    #[error("wavefunction contains non-finite values")]
    NonFiniteInput,

    #[error("wavefunction is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("wavefunctions live on different grids")]
    GridMismatch,

    #[error("translation would push {lost:.3e} of the norm off the grid")]
    Truncation { lost: f64 },

    #[error("band too narrow for a stable matrix element: {0}")]
    DegenerateBand(String),

    #[error("phase increment {increment:.3} rad at t = {t} exceeds pi/2; refine the time grid")]
    PhaseUnwrap { t: f64, increment: f64 },

    #[error("{fraction:.3e} of the norm reached the grid boundary at t = {t}")]
    BoundaryLeak { t: f64, fraction: f64 },

    #[error("invalid propagator configuration: {0}")]
    InvalidPropagator(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
