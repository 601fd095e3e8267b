use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("illegal tree: {0}")]
    IllegalTree(String),
    #[error("realizability error: {0}")]
    Realizability(String),
    #[error("oracle misuse: {0}")]
    OracleMisuse(String),
    #[error("instance too large for exhaustive oracle: {0}")]
    OracleTooLarge(String),
    #[error("internal consistency error: {0}")]
    InternalConsistency(String),
    #[error("model violation: {0}")]
    ModelViolation(String),
    #[error("variance underflow: empirical Var(log x_{feature}) = {value:.3e} below {floor:.3e}")]
    VarianceUnderflow { feature: usize, value: f64, floor: f64 },
    #[error("rank did not increase when adding a column")]
    RankNotIncreased,
    #[error("more than {0} nonzero terms extracted")]
    SparsityViolation(usize),
    #[error("generator exhausted: {0}")]
    GeneratorExhausted(String),
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("soundness violation: {0}")]
    Soundness(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
