use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("symbol `{0}` is not part of the alphabet")]
    InvalidSymbol(String),

    #[error("absolute continuity violated at symbol `{0}`: one distribution puts zero weight on it")]
    AbsoluteContinuity(String),

    #[error("signal model is not informative: {0}")]
    NonInformative(String),

    #[error("truncation at M = {0} leaves no informative symbol")]
    NonInformativeTruncation(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("cannot parse rational `{0}`")]
    ParseRational(String),

    #[error("outcome space needs {required} (state, profile) pairs, exact engine budget is {budget}")]
    TooLarge { required: u128, budget: u128 },

    #[error("conditioning on a null event: {0}")]
    NullConditioning(String),

    #[error("announcement of agent {agent} is not constant on its own information blocks")]
    Measurability { agent: usize },

    #[error("communication digraph is not strongly connected")]
    Disconnected,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("private beliefs are bounded away from 0 on the whole grid: no lower tail to exploit")]
    BoundedBeliefs,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl From<std::io::Error> for LabError {
    fn from(err: std::io::Error) -> Self {
        LabError::Io(err.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(err: csv::Error) -> Self {
        LabError::Io(err.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(err: serde_json::Error) -> Self {
        LabError::Config(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
