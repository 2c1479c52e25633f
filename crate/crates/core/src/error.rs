use thiserror::Error;

/// Errors shared across the toolkit.
///
/// `InvalidSpec` covers malformed measure specifications and violated
/// preconditions; `Numeric` covers breakdowns inside an otherwise valid
/// computation (failed bracketing, factorization trouble); `Divergent`
/// marks a requested-finite quantity that is provably infinite.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("requested quantity is divergent: {0}")]
    Divergent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_spec(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }

    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn divergent(msg: impl Into<String>) -> Self {
        Error::Divergent(msg.into())
    }
}
