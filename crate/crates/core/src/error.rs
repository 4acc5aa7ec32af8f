use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("channel is not slender: radius {radius} m must be below loop length {length} m")]
    NotSlender { radius: f64, length: f64 },

    #[error("dispersive regime violated: {0}")]
    Regime(String),

    #[error("Bessel argument |z| = {0} exceeds the power-series cap of 15")]
    BesselOutOfRange(f64),

    #[error("degenerate distribution: variance is zero at t = {0} s")]
    DegenerateDistribution(f64),

    #[error("quadrature did not converge on [{a}, {b}] (estimated error {error:e}, tolerance {tolerance:e})")]
    Quadrature {
        a: f64,
        b: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
