use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("series is empty")]
    EmptySeries,

    #[error("first calendar day {0} has no observation")]
    LeadingGap(chrono::NaiveDate),

    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("series has zero variance")]
    DegenerateVariance,

    #[error("autocorrelation never falls to 1/e within {max_lag} lags")]
    NoCrossing { max_lag: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{0} is undefined for this input")]
    UndefinedMeasure(&'static str),

    #[error("measure series were produced with different configurations: {0}")]
    ConfigMismatch(String),

    #[error("series has fewer than two distinct values")]
    DegenerateSeries,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}
