use alloc::vec::Vec;

use crate::field::ScalarKind;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("scalar kind mismatch: expected {expected:?}, found {found:?}")]
    KindMismatch { expected: ScalarKind, found: ScalarKind },
    #[error("invalid shape {0:?}: extents must be positive")]
    InvalidShape(Vec<usize>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("point outside the domain: forward value {value:e} at flat index {index}")]
    Positivity { index: usize, value: f64 },
    #[error("negative rate {value:e} at flat index {index}")]
    NegativeRate { index: usize, value: f64 },
    #[error("negative count {value} at flat index {index}")]
    NegativeCount { index: usize, value: f64 },
    #[error("real dimension {dim} exceeds the dense assembly cap of {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("nonpositive curvature {curvature:e} along the search direction")]
    NonconvexDirection { curvature: f64 },
    #[error("zero search direction")]
    ZeroDirection,
    #[error("line search failed: no feasible trial point")]
    LineSearchFailed,
    #[error("malformed field blob: {0}")]
    Decode(&'static str),
}
