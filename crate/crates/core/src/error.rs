use thiserror::Error;

use crate::geometry::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// The innermost error, below any stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric is not positive definite at ({:.6}, {:.6})", at.x, at.y)]
    DegenerateMetric { at: Point },

    #[error("trajectory left the working chart; last valid point ({:.6}, {:.6})", last.x, last.y)]
    ChartExit { last: Point },

    #[error("empty parameter interval [{a}, {b}]")]
    EmptyInterval { a: f64, b: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("two-point geodesic join did not converge after {iterations} iterations (mismatch {mismatch:.3e})")]
    JoinFailure { iterations: usize, mismatch: f64 },

    #[error("normal flow leaves the band |phi| <= {band}; admissible tau is at most {max_tau:.6e}")]
    BandExit { band: f64, max_tau: f64 },

    #[error("gradient of phi vanishes at ({:.6}, {:.6})", at.x, at.y)]
    DegenerateGradient { at: Point },

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("chord construction failed: {0}")]
    ChordFailure(String),

    #[error("path is not in the path space: {0}")]
    NotInPathSpace(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("degenerate cusp: one-sided velocity vanishes at parameter {at}")]
    DegenerateCusp { at: f64 },

    #[error("flow stagnated: {0}")]
    Stagnation(String),

    #[error("brake orbit reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported artifact format: expected {expected}, found {found}")]
    Format { expected: String, found: String },

    #[error("domain is not strongly concave (worst margin {worst_margin:.4e})")]
    NotConcave { worst_margin: f64 },

    #[error("no certified orthogonal geodesic chord found in a certified concave domain")]
    NoChords,

    #[error("[{stage}] {source}")]
    Stage { stage: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
