use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A function returned a non-finite value where a finite one was required.
    #[error("non-finite evaluation at x = {x}: {context}")]
    Evaluation { x: f64, context: String },
    #[error("{component}: {message}")]
    Component {
        component: String,
        message: String,
    },
    /// Two independent checks of the same property disagreed.
    #[error("inconsistent checks: {0}")]
    Inconsistency(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn component(component: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Component {
            component: component.into(),
            message: message.into(),
        }
    }
}
