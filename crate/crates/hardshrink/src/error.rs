use std::fmt;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by kernels, objectives, solvers and generators.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violated a precondition.
    InvalidArgument(String),
    /// A linear-algebra routine failed numerically (singular system,
    /// non-convergence). Carries a rough conditioning estimate when one
    /// is available.
    Numerical {
        message: String,
        condition_estimate: Option<f64>,
    },
    /// An iterative solver produced a non-finite objective value,
    /// typically from a step size that is too large.
    Divergence { iteration: usize },
    /// File or serialization failure, with the offending path.
    Io { path: String, message: String },
}

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn numerical(msg: impl Into<String>, condition_estimate: Option<f64>) -> Self {
        Error::Numerical {
            message: msg.into(),
            condition_estimate,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Numerical {
                message,
                condition_estimate,
            } => match condition_estimate {
                Some(cond) => write!(f, "numerical failure: {message} (cond ~ {cond:.3e})"),
                None => write!(f, "numerical failure: {message}"),
            },
            Error::Divergence { iteration } => {
                write!(
                    f,
                    "divergence at iteration {iteration}: non-finite objective value \
                     (step size too large?)"
                )
            }
            Error::Io { path, message } => write!(f, "io failure at {path}: {message}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io {
            path: String::from("<unknown>"),
            message: e.to_string(),
        }
    }
}
