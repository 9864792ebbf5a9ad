use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value fell outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A type invariant was violated at construction time.
    #[error("invalid construction: {0}")]
    Construction(String),

    /// Every candidate assigns zero probability to the observed output.
    #[error("degenerate evidence: posterior mass is zero for every candidate")]
    DegenerateEvidence,

    /// Knowledge gain is undefined when the prior confidence is zero.
    #[error("statement has zero prior confidence")]
    ZeroConfidence,

    /// `execute` was called with an admission that no longer matches the filter state.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A convex function is infinite at an interval endpoint.
    #[error("envelope error: {0}")]
    Envelope(String),

    /// The feasible set of a subproblem or search is empty.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A state-space or problem-size guard was exceeded.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
