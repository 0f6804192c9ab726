use thiserror::Error;

/// Errors raised by the solver and its front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An inverse branch or envelope was evaluated outside its domain.
    #[error("{what}: argument {value} is below the branch domain (requires >= {bound})")]
    Domain {
        what: &'static str,
        value: f64,
        bound: f64,
    },

    /// A nonlinearity family has no inverse for the requested branch.
    #[error("{what}: not available for the {family} nonlinearity")]
    NotInvertible {
        what: &'static str,
        family: &'static str,
    },

    /// The shooting trajectory escaped the overflow guard before t = 1.
    #[error("trajectory blew up at t = {t} (u = {u})")]
    BlowUp { t: f64, u: f64 },

    /// The adaptive integrator could not make progress.
    #[error("step size underflow at t = {t} (h = {h})")]
    StepFailure { t: f64, h: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("malformed profile data at line {line}: {message}")]
    ProfileFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
