use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid selector: asked for the last {requested} segments of {available}")]
    InvalidSelector { requested: usize, available: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("numeric failure{}: {what}", iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    Numeric { iteration: Option<u64>, what: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn spec(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }

    pub(crate) fn numeric(what: impl Into<String>) -> Self {
        Error::Numeric {
            iteration: None,
            what: what.into(),
        }
    }

    /// Attach an iteration index to a numeric failure that does not carry one yet.
    pub fn at_iteration(self, i: u64) -> Self {
        match self {
            Error::Numeric {
                iteration: None,
                what,
            } => Error::Numeric {
                iteration: Some(i),
                what,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
