use crate::means::SolveReport;

/// Errors produced by construction and solver routines.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("eigensolver did not converge within {0} sweeps")]
    EigenNonConvergence(usize),

    #[error("measure must contain at least one atom with positive weight")]
    EmptyMeasure,

    #[error("weights must be finite and nonnegative, got {0}")]
    InvalidWeight(f64),

    #[error("solver stopped after {} iterations with residual {:.3e}", report.iterations, report.residual)]
    MaxIterExceeded {
        /// Best report at the point the iteration budget ran out.
        report: SolveReport,
    },

    #[error("permutation oracle supports at most 8 atoms, got {0}")]
    OracleTooLarge(usize),

    #[error("oracle requires uniform weights on equally sized supports")]
    OracleNotUniform,

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("experiment row {index} (n = {n}) failed: {source}")]
    RowFailed {
        index: usize,
        n: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
