use thiserror::Error;

pub type Result<T> = std::result::Result<T, KakeyaError>;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum KakeyaError {
    #[error("unsupported dimension {dim}: {context}")]
    Dimension { dim: usize, context: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("vector is not unit length (norm {norm})")]
    NonUnit { norm: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("point lies within {tolerance} of the loop (distance {distance})")]
    Boundary { distance: f64, tolerance: f64 },

    #[error("integer rounding residual {residual} exceeds 0.1; loop is under-resolved")]
    Consistency { residual: f64 },

    #[error("consecutive samples are {gap} rad apart (limit pi/2); lifting is unresolved")]
    UnderResolved { gap: f64 },

    #[error("ray crossing is degenerate for both tie-breaking slopes")]
    DegenerateCrossing,

    #[error("least-squares fit is ill-conditioned: {reason}")]
    IllConditioned { reason: String },

    #[error("leading coefficient {found} is not within 10% of {expected}")]
    Orientation { found: f64, expected: f64 },

    #[error("mesh spacing {spacing} too coarse for scale {scale}")]
    MeshTooCoarse { spacing: f64, scale: f64 },

    #[error("grid spacing {h} too coarse for radius {radius}")]
    GridTooCoarse { h: f64, radius: f64 },

    #[error("duplicate net points at index {first} and {second}")]
    DuplicatePoints { first: usize, second: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("loop is not closed: {0}")]
    OpenLoop(String),

    #[error("modulus of continuity unavailable: {0}")]
    ModulusUnavailable(String),

    #[error("no direction within tolerance {tol} (best residual {best_residual})")]
    NoFixedPoint { tol: f64, best_residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl KakeyaError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        KakeyaError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
