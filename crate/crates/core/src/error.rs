use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent input (shapes, lengths, configuration ranges).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The covariance matrix could not be factorized even with maximal jitter.
    #[error("simulation failed: {0}")]
    Simulation(String),

    /// The Jacobian determinant is non-positive at the listed lattice cells.
    #[error("orientation not preserved at {} cell(s), first {:?}", .cells.len(), .cells.first())]
    Orientation { cells: Vec<(usize, usize)> },

    #[error("neighborhood smaller than polynomial space: {points} points for {dim} monomials")]
    TooFewPoints { points: usize, dim: usize },

    #[error("estimation failed: {0}")]
    Estimation(String),

    /// A dilatation reached or left the unit disk.
    #[error("distortion error: |mu| = {modulus} >= 1 at site {site}")]
    Distortion { site: usize, modulus: f64 },

    #[error("flow step failed at t = {t}: {reason}")]
    Flow { t: f64, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
