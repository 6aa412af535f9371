use thiserror::Error;

pub type Result<T, E = LssError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LssError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range {lo}..={hi}")]
    IndexOutOfRange { index: isize, lo: isize, hi: isize },

    #[error("trajectory blew up (|u| > 1e8) at t = {time}")]
    BlowUp { time: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("alpha^2 must be positive, got {0}")]
    InvalidAlpha2(f64),

    #[error("time grid needs dt > 0 and at least 2 steps (dt = {dt}, steps = {n_steps})")]
    InvalidGrid { dt: f64, n_steps: usize },

    #[error("coarsening factor {factor} does not divide {n_steps} steps")]
    NotDivisible { n_steps: usize, factor: usize },

    #[error("matrix is not positive definite (pivot breakdown in block {block})")]
    NotPositiveDefinite { block: usize },

    #[error("singular block encountered in block {block}")]
    SingularBlock { block: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("solution and trajectory live on different grids")]
    GridMismatch,

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
