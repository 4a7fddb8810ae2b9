use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("weight {index} is negative or non-finite ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, expected 1")]
    SumNotOne { sum: f64 },
    #[error("preference vector needs at least 2 weights, got {0}")]
    TooFewWeights(usize),
    #[error("preference has {got} weights, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("attribute index {0} is out of range")]
    UnknownAttribute(usize),

    #[error("failed to parse map document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("map schema violation: {0}")]
    SchemaViolation(String),
    #[error("goal {goal} is unreachable from start {start}")]
    DisconnectedMap { start: String, goal: String },
    #[error("efficiency is a route-level attribute and has no per-edge utility")]
    EfficiencyIsRouteLevel,
    #[error("invalid route: {0}")]
    InvalidRoute(String),
    #[error("map has more than {limit} start-to-goal routes")]
    RouteExplosion { limit: usize },

    #[error("unknown complaint option `{0}`")]
    UnknownOption(String),
    #[error("invalid complaint: {0}")]
    InvalidComplaint(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("score list is empty")]
    EmptyInput,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(String),

    #[error("session `{0}` not found")]
    SessionNotFound(String),
    #[error("out-of-order message: {0}")]
    OutOfOrderMessage(String),
}

impl Error {
    /// Stable machine-readable code, used in the HTTP error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NegativeWeight { .. } => "NEGATIVE_WEIGHT",
            Error::SumNotOne { .. } => "SUM_NOT_ONE",
            Error::TooFewWeights(_) | Error::DimensionMismatch { .. } => "INVALID_PREFERENCE",
            Error::UnknownAttribute(_) => "UNKNOWN_ATTRIBUTE",
            Error::Parse(_) => "PARSE_ERROR",
            Error::SchemaViolation(_) => "SCHEMA_VIOLATION",
            Error::DisconnectedMap { .. } => "DISCONNECTED_MAP",
            Error::EfficiencyIsRouteLevel => "EFFICIENCY_IS_ROUTE_LEVEL",
            Error::InvalidRoute(_) => "INVALID_ROUTE",
            Error::RouteExplosion { .. } => "ROUTE_EXPLOSION",
            Error::UnknownOption(_) => "UNKNOWN_OPTION",
            Error::InvalidComplaint(_) => "INVALID_COMPLAINT",
            Error::InvalidConfig(_) => "INVALID_CONFIG",
            Error::EmptyInput => "EMPTY_INPUT",
            Error::Io(_) | Error::Csv(_) => "IO_ERROR",
            Error::SessionNotFound(_) => "SESSION_NOT_FOUND",
            Error::OutOfOrderMessage(_) => "OUT_OF_ORDER_MESSAGE",
        }
    }
}
