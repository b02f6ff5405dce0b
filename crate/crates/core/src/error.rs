use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("degree must be non-negative, got {0}")]
    NegativeDegree(i64),
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
    #[error("model or metric family mismatch: {0}")]
    ModelMismatch(String),
    #[error("vertical twist at p = {p} would have negative multiplicity {k}")]
    NegativeTwist { p: u64, k: i64 },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("flag data is not an F_p-rational point: {0}")]
    NotRational(String),
    #[error("invalid flag: {0}")]
    InvalidFlag(String),
    #[error("zero section has no valuation")]
    ZeroSection,
    #[error("coefficient vector has length {got}, expected {expected}")]
    RankMismatch { expected: usize, got: usize },
    #[error("lattice basis is rank deficient")]
    RankDeficient,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("refinement budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("outside exact scope: {0}")]
    ScopeExceeded(String),
    #[error("{0} section(s) could not be certified on the unit-norm boundary")]
    AmbiguousBoundary(usize),
    #[error("bundle is not in the ample catalog: {0}")]
    NotAmpleInCatalog(String),
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
