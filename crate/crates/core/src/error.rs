use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("division by an interval containing zero: [{lo}, {hi}]")]
    DivisionByZeroInterval { lo: f64, hi: f64 },
    #[error("square root of an interval with negative part: [{lo}, {hi}]")]
    NegativeSqrt { lo: f64, hi: f64 },
    #[error("grid point ({i}, {j}) lies outside the triangle of size {n}")]
    PointOutsideTriangle { i: i64, j: i64, n: u32 },
    #[error("subdomain is empty")]
    EmptyDomain,
    #[error("subdomain is disconnected ({components} components)")]
    DisconnectedDomain { components: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),
    #[error("interval enclosure too wide: {0}")]
    EnclosureBlowup(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no root: {0}")]
    NoRoot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
