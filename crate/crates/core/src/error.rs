use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("sample count {got} does not match domain ({expected} cells)")]
    SampleCount { expected: usize, got: usize },

    #[error("non-finite sample at cell {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: expected n = {expected}, got n = {got}")]
    Dimension { expected: usize, got: usize },

    #[error("scale J = {j} is too fine: cube side {side} spans fewer than 2 cells of width {spacing}")]
    ScaleTooFine { j: i32, side: f64, spacing: f64 },

    #[error("invalid scale range: J_min = {j_min} > J_max = {j_max}")]
    ScaleRange { j_min: i32, j_max: i32 },

    #[error("region does not intersect the domain")]
    EmptyIntersection,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weight is not locally integrable: {0}")]
    NonIntegrable(String),

    #[error("weight must be positive: {0}")]
    NonPositiveWeight(String),

    #[error("cube family is empty")]
    EmptyFamily,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("containment violated: {0}")]
    Containment(String),

    #[error("support of piece {index} leaves its cube")]
    SupportViolation { index: usize },

    #[error("function support is not covered by any family cube")]
    NotCovered,

    #[error("pointwise domination |f| <= |g| violated at cell {0}")]
    Domination(usize),

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("operator `{0}` is not linear")]
    NonLinearOperator(String),

    #[error("unsupported operator `{0}`")]
    UnsupportedOperator(String),

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("truncation radius {eps} is below resolution (minimum {min})")]
    BelowResolution { eps: f64, min: f64 },

    #[error("empty truncation list")]
    EmptyTruncationList,

    #[error("norm vanishes on a nonzero function (corpus member {0})")]
    DegenerateNorm(usize),

    #[error("pair {0} has f = 0 but g != 0")]
    UnverifiablePair(usize),

    #[error("negative sample in a pair family at pair {0}")]
    NegativePair(usize),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
