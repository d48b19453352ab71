use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("level mismatch: function lives on the {actual} level, expected {expected}")]
    LevelMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("matrix is not symmetric positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error(
        "overlap too large for the structured coloring: subdomains {first} and {second} share a color but their overlapped regions touch"
    )]
    OverlapTooLarge { first: usize, second: usize },

    #[error("local solve on subspace {subspace} did not converge in {iterations} iterations (residual {residual:e})")]
    LocalSolveFailed {
        subspace: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("outer iteration {iteration} failed: {source}")]
    IterationFailed {
        iteration: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("iterate left the feasible set at node {node} (violation {violation:e})")]
    Infeasible { node: usize, violation: f64 },

    #[error("eigenvalue iteration did not converge after {sweeps} sweeps")]
    EigenNotConverged { sweeps: usize },

    #[error("reference minimizer not certified: optimality residual {residual:e} exceeds {tolerance:e}")]
    ReferenceNotCertified { residual: f64, tolerance: f64 },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("fit window too short: {len} points, need at least {min}")]
    WindowTooShort { len: usize, min: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
