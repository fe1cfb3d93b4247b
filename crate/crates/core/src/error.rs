use thiserror::Error;

/// Errors raised by the simulator, the embedding pipeline and the trainer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "state of {n_modes} modes at cutoff {cutoff} needs {required_bytes} bytes, budget is {budget_bytes}"
    )]
    Sizing {
        n_modes: usize,
        cutoff: usize,
        required_bytes: u128,
        budget_bytes: u128,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} = {value} is outside the stable range |{what}| <= {limit}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("gate kind {0} has no symplectic representation")]
    UnsupportedKind(&'static str),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("no valid scaling found on a grid of {c_points} c-values x {d_points} d-values")]
    ScalingNotFound { c_points: usize, d_points: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("graph has {n} nodes, exhaustive search is limited to {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("training diverged at step {step}: {reason}")]
    Divergence { step: usize, reason: String },

    #[error("objective failed at coordinate {coordinate}: {source}")]
    Objective {
        coordinate: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
