use thiserror::Error;

pub type Result<T> = std::result::Result<T, HypError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HypError {
    #[error("point with Euclidean norm {norm} lies within the boundary tolerance of the unit sphere")]
    BoundaryProximity { norm: f64 },

    #[error("dimension {dim} not supported (expected {min}..={max})")]
    UnsupportedDimension { dim: usize, min: usize, max: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("non-finite coordinate")]
    NonFinite,

    #[error("cannot normalize the zero vector")]
    ZeroVector,

    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("need at least {need} points, got {got}")]
    NotEnoughPoints { got: usize, need: usize },

    #[error("degenerate hull: affine rank {rank} in dimension {dim}")]
    DegenerateHull { rank: usize, dim: usize },

    #[error("hull construction failed to stabilize after perturbation")]
    HullUnstable,

    #[error("apex is not strictly interior to the polytope")]
    ApexNotInterior,

    #[error("no planar section: direction points outside the section cone")]
    NoSection,

    #[error("integral diverged (running estimate {0:e})")]
    SingularIntegral(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HypError {
    fn from(err: std::io::Error) -> Self {
        HypError::Io(err.to_string())
    }
}

impl From<csv::Error> for HypError {
    fn from(err: csv::Error) -> Self {
        HypError::Io(err.to_string())
    }
}

impl From<serde_json::Error> for HypError {
    fn from(err: serde_json::Error) -> Self {
        HypError::Parse { line: err.line(), message: err.to_string() }
    }
}
