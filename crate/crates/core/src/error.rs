use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mixture parameters: {0}")]
    InvalidParams(String),
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value at index {0}")]
    NonFiniteSample(usize),
    #[error("interval lower bound {lower} exceeds upper bound {upper}")]
    InvalidInterval { lower: f64, upper: f64 },
    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("components {0} and {1} share the same mean")]
    DuplicateMeans(usize, usize),
    #[error("no root on the bracket")]
    NoRoot,
    #[error("root finder exhausted {0} evaluations")]
    RootNotConverged(usize),
    #[error("half-gap must be positive, got {0}")]
    NonPositiveGap(f64),
    #[error("cell {0} has zero probability mass")]
    ZeroMassCell(usize),
    #[error("component index {index} out of range for {components} components")]
    ComponentOutOfRange { index: usize, components: usize },
    #[error("component count mismatch: {0} vs {1}")]
    ComponentMismatch(usize, usize),
    #[error("VA2 requires exactly 2 components, got {0}")]
    Va2NeedsTwoComponents(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
