use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid admissible map: {0}")]
    InvalidMap(String),
    #[error("point sets of base and boundary are not disjoint (shared label `{0}`)")]
    NotDisjoint(String),
    #[error("spaces do not match: {0}")]
    Mismatch(String),
    #[error("map `{0}` is not continuous")]
    NotContinuous(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("vertex {0} is outside the working ball")]
    OutsideBall(String),
    #[error("empty sample: {0}")]
    EmptySample(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;
