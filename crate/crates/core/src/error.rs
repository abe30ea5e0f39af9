use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample size must be at least 1")]
    ZeroSampleSize,
    #[error("empty sample or cost list")]
    Empty,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid risk specification: {0}")]
    InvalidRiskSpec(String),
    #[error("certificate shape does not match the risk specification: {0}")]
    ShapeMismatch(String),
    #[error("numerical overflow in {0}")]
    Overflow(&'static str),
    #[error("decision `{0}` is not in the decision space")]
    NotInSpace(String),
    #[error("invalid decision space: {0}")]
    InvalidSpace(String),
    #[error("interval decision space is not declared convex; golden-section search is not valid")]
    NotConvex,
    #[error("samples must come from independent streams: {0}")]
    IndependenceViolation(String),
    #[error("problem `{0}` does not declare non-negative costs, required for spectral/coherent measures")]
    NonNegativeRequired(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("enumeration needs {atoms} atoms, budget is {budget}")]
    BudgetExceeded { atoms: u128, budget: u128 },
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("confidence parameter must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
