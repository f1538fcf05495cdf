use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{quantity} = {value} is outside [{lo}, {hi}]")]
    Domain {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid planform: {0}")]
    InvalidPlanform(String),

    #[error("non-finite chord value at x = {x} mm")]
    Evaluation { x: f64 },

    #[error("query ({x}, {y}) lies outside the {table} grid; refusing to extrapolate")]
    Extrapolation { table: String, x: f64, y: f64 },

    #[error("{table} has no stored value around ({x}, {y})")]
    MissingCell { table: String, x: f64, y: f64 },

    #[error("no periodic steady state after {periods} periods (last change {change:e})")]
    Convergence { periods: usize, change: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("calibration: {0}")]
    Calibration(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failure while
    /// running. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::InvalidPlanform(_)
                | Error::Extrapolation { .. }
                | Error::InvalidArgument(_)
                | Error::Calibration(_)
                | Error::Config(_)
                | Error::TomlDe(_)
        )
    }

    pub(crate) fn domain(quantity: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Error::Domain {
            quantity,
            value,
            lo,
            hi,
        }
    }
}
