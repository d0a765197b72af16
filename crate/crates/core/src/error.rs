use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("halfwidth extraction failed: {0}")]
    ExtractionFailure(String),

    #[error("unstable system (spectral abscissa {abscissa:.6e} rad/s)")]
    UnstableSystem { abscissa: f64 },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("no instability threshold in [{lo:.6e}, {hi:.6e}]")]
    NoThreshold { lo: f64, hi: f64 },

    #[error("mode `{0}` not present in state")]
    NotFound(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used to flag failed sweep rows.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::SingularPoint(_) => "singular-point",
            Error::ExtractionFailure(_) => "extraction-failure",
            Error::UnstableSystem { .. } => "unstable",
            Error::NumericFailure(_) => "numeric-failure",
            Error::NoThreshold { .. } => "no-threshold",
            Error::NotFound(_) => "not-found",
            Error::InvalidState(_) => "invalid-state",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code: 1 for configuration problems, 2 for everything
    /// that goes wrong during the computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
