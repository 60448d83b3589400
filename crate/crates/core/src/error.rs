use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: argument {value} outside the supported domain")]
    Domain { what: &'static str, value: f64 },

    #[error("{what}: index {index} outside [{lo}, {hi}]")]
    Range {
        what: &'static str,
        index: usize,
        lo: usize,
        hi: usize,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("population exploded at t = {time}: {count} particles exceeds the cap {cap}")]
    Explosion { time: f64, count: usize, cap: usize },

    #[error("exponential weight overflow: rho * x = {exponent}")]
    Overflow { exponent: f64 },

    #[error("statistic undefined on an empty population")]
    EmptyPopulation,

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
