use thiserror::Error;

/// Errors surfaced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad scenario or parameter input.
    #[error("configuration: {0}")]
    Config(String),

    /// The pointing geometry has no solution in [0, pi/2).
    #[error("unsolvable geometry: {0}")]
    UnsolvableGeometry(String),

    /// Adaptive quadrature ran out of subdivisions. Carries the best
    /// estimate and the residual error bound at the point of failure.
    #[error("quadrature budget exhausted: estimate {estimate}, error bound {error_bound}")]
    QuadratureBudget { estimate: f64, error_bound: f64 },

    /// A special function or linear-algebra routine failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Degenerate geometry during detection (photon inside the aperture).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A transport run produced no usable photons.
    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
