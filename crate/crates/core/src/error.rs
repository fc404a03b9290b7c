use thiserror::Error;

/// Errors raised by the geometry, volume, tangency and probe layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate hyperplane: all normal coefficients are zero")]
    DegenerateHyperplane,

    #[error("hyperplane has no component along the x-subspace (alpha = 0)")]
    VerticalDegenerate,

    #[error("point {point:?} lies where the defining function is not smooth")]
    NonSmoothPoint { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("invalid psi: {0}")]
    InvalidPsi(String),

    #[error("psi form is not radially reducible: {0}")]
    UnsupportedPsi(String),

    #[error("point is not a tangency for the given direction (misalignment {misalignment:e})")]
    NotATangency { misalignment: f64 },

    #[error("tangency is not Morse: smallest |eigenvalue| {margin:e} <= {threshold:e}")]
    NonMorseTangency { margin: f64, threshold: f64 },

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("sampled hyperplane {index} is nearly tangent to the boundary (angle {angle:e} rad)")]
    TangencyInRegion { index: usize, angle: f64 },

    #[error("insufficient samples: {rows} rows for {columns} columns (need {required})")]
    InsufficientSamples {
        rows: usize,
        columns: usize,
        required: usize,
    },

    #[error("rank tolerance {rank_tol:e} is below the noise floor {floor:e}")]
    NoiseFloor { rank_tol: f64, floor: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    /// Whether the error reflects a geometric/domain condition rather than
    /// malformed input.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::DegenerateHyperplane
                | Error::VerticalDegenerate
                | Error::NonSmoothPoint { .. }
                | Error::NotATangency { .. }
                | Error::NonMorseTangency { .. }
                | Error::NoConvergence { .. }
                | Error::TangencyInRegion { .. }
                | Error::InsufficientSamples { .. }
                | Error::NoiseFloor { .. }
                | Error::UnsupportedPsi(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
