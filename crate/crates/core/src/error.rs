//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layout error: {0}")]
    Layout(String),

    #[error("capacity cap exceeded: {entries} entries (cap {cap})")]
    CapExceeded { entries: u128, cap: usize },

    #[error("state not normalized: norm {norm}")]
    NotNormalized { norm: f64 },

    #[error("matrix not Hermitian: max entry deviation {deviation}")]
    NotHermitian { deviation: f64 },

    #[error("matrix not positive semidefinite: eigenvalue {eigenvalue}")]
    NotPositive { eigenvalue: f64 },

    #[error("trace must be 1, got {trace}")]
    BadTrace { trace: f64 },

    #[error("pmf invalid: {0}")]
    BadPmf(String),

    #[error("party index {party} out of range for {parties} parties")]
    PartyOutOfRange { party: usize, parties: usize },

    #[error("subset error: {0}")]
    BadSubset(String),

    #[error("instrument for party {party} not complete: deviation {deviation}")]
    IncompleteInstrument { party: usize, deviation: f64 },

    #[error("dimension mismatch at party {party}: expected {expected}, got {got}")]
    DimMismatch {
        party: usize,
        expected: usize,
        got: usize,
    },

    #[error("povm element {index} of party {party} not positive: eigenvalue {eigenvalue}")]
    PovmNotPositive {
        party: usize,
        index: usize,
        eigenvalue: f64,
    },

    #[error("unknown state name: {0}")]
    UnknownState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid file: {0}")]
    InvalidFile(String),

    #[error("conditional state for outcome {0:?} is not rank one (tail weight {1})")]
    MixedConditional(Vec<usize>, f64),

    #[error("vertex enumeration supports at most {cap} parties, got {parties}")]
    TooManyParties { parties: usize, cap: usize },

    #[error("LP solver failed: {0}")]
    Lp(String),

    #[error("simulation config invalid: {0}")]
    BadSimConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
