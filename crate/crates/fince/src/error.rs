//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by models, solvers, imputation and inference routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameters outside the admissible set (e.g. a precision matrix that is
    /// not positive definite, so the model is not integrable).
    #[error("inadmissible parameters: {0}")]
    InadmissibleParams(String),

    /// A point outside the declared support of the model.
    #[error("point outside model support: {0}")]
    OutOfSupport(String),

    /// Divergence function evaluated outside its domain.
    #[error("divergence domain error: {0}")]
    DomainError(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A solver exhausted its iteration budget. `partial` carries the last
    /// iterate so callers can still report it.
    #[error("{context}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        context: String,
        iterations: usize,
        residual: f64,
        partial: Option<Box<crate::report::EstimateReport>>,
    },

    /// The proposal density vanished at one of its own draws.
    #[error("proposal density is zero at a drawn completion (record {record})")]
    ProposalSupportError { record: usize },

    /// Every completion of a record underflowed in the weight computation.
    #[error("all fractional weights are zero for record {record}")]
    AllWeightsZero { record: usize },

    /// The bread matrix of a sandwich estimator could not be inverted.
    #[error("bread matrix is singular (condition number {cond:.3e})")]
    SingularBread { cond: f64 },

    #[error("estimate report carries no covariance")]
    MissingCovariance,

    /// Closed-form variance pieces exist only for the original-NCE divergence.
    #[error("variance estimator supports only the original NCE divergence")]
    UnsupportedDivergence,

    /// A missingness mechanism refers to a coordinate outside the data.
    #[error("mechanism references coordinate {coord} but data has dimension {dim}")]
    BadMechanism { coord: usize, dim: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error at record {line}: {msg}")]
    CsvFormat { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn non_convergence(context: &str, iterations: usize, residual: f64) -> Self {
        Error::NonConvergence {
            context: context.to_string(),
            iterations,
            residual,
            partial: None,
        }
    }
}
