use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed nest descriptor: {0}")]
    MalformedSpec(String),
    #[error("index mismatch: {0}")]
    IndexMismatch(String),
    #[error("cut {0} is not in the nest")]
    CutNotInNest(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unbounded rule: {0}")]
    UnboundedRule(String),
    #[error("window of {size} indices exceeds the cap of {cap}")]
    WindowTooLarge { size: usize, cap: usize },
    #[error("support could not be bounded: {0}")]
    UnknownSupport(String),
    #[error("undecidable boundary: {0}")]
    UndecidableBoundary(String),
    #[error("undecidable tail: {0}")]
    UndecidableTail(String),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("witness budget exhausted: {0}")]
    WitnessBudgetExhausted(String),
    #[error("operator is not non-compact: {0}")]
    NotNonCompact(String),
    #[error("block too small: {0}")]
    BlockTooSmall(String),
    #[error("operator is not in the nest algebra: {0}")]
    NotInAlgebra(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
