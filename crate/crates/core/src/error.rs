use thiserror::Error;

/// Errors shared by the arithmetic kernel, the orbit machinery, the
/// evaluators and the sampler.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A comparison or digit extraction could not be certified at the
    /// working precision. Callers may retry at doubled precision.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("valuation of zero requested")]
    ZeroValuation,
    #[error("not a square")]
    NotASquare,
    #[error("invalid nu: {0}")]
    InvalidNu(String),
    #[error("element is not regular")]
    NotRegular,
    /// Some M_ij or N_ij is negative; evaluators treat this as the
    /// vanishing branch rather than a failure.
    #[error("negative orbit invariant")]
    NegativeInvariant,
    #[error("missing symbol: {0}")]
    MissingSymbol(&'static str),
    #[error("sampling target unreachable: {0}")]
    TargetUnreachable(String),
    #[error("oracle unstable: {0}")]
    Unstable(String),
    #[error("not applicable: {0}")]
    NotApplicable(&'static str),
    #[error("corollary mismatch: {0}")]
    CorollaryMismatch(String),
    #[error("bad input: {0}")]
    BadInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
