use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix contains NaN or infinite entries")]
    NonFinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vectors are linearly dependent: group {group} is rank deficient")]
    Degenerate { group: usize },

    #[error("matrix is singular or too ill-conditioned (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("alternating projections did not converge after {iterations} iterations (residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("series tail is saturated at the numeric floor; shorten the run times")]
    Saturation,

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("propagator overflow at t = {time}: entries exceed 1e300, orthonormalize more often")]
    Overflow { time: f64 },

    #[error("time {time} is not representable in this cocycle's time domain")]
    InvalidTime { time: f64 },

    #[error("orbit state {0} is outside the integrated orbit")]
    OrbitOutOfRange(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("reference tuple is not orthonormal (deviation {deviation:e})")]
    Reference { deviation: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("block {block} leaves the admissible domain (residual {residual:e})")]
    Domain { block: usize, residual: f64 },

    #[error("frame collapsed at QR step {step}")]
    Collapse { step: usize },

    #[error("triangular solve at step {step} is unstable (condition {condition:e}); increase ortho_interval")]
    Stability { step: usize, condition: f64 },

    #[error("block {block}: intersection has dimension {found}, expected {expected}; run times are too short for transversality")]
    Transversality { block: usize, expected: usize, found: usize },
}
