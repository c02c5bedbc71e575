use thiserror::Error;

/// Errors raised when model parameters violate their domain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{name}` = {value} is out of domain: {reason}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("configuration error: {0}")]
    Config(String),
}

impl ParamError {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        ParamError::OutOfDomain {
            name,
            value,
            reason,
        }
    }
}
