use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration that violates a documented invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// A protocol plan that cannot be executed as requested.
    #[error("plan error: {0}")]
    Plan(String),

    /// An estimator could not produce a value for `component`.
    #[error("estimation failed for {component}: {reason}")]
    Estimation { component: String, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn plan(msg: impl Into<String>) -> Self {
        Error::Plan(msg.into())
    }

    pub(crate) fn estimation(component: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Estimation {
            component: component.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
