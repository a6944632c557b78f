use thiserror::Error;

/// Errors raised by parameter validation and shape checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("level count {m} exceeds the supported maximum of {max}")]
    TooManyLevels { m: usize, max: usize },

    #[error("malformed frequency file at line {line}: {reason}")]
    FrequencyFile { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(name, format!("{p} is not a probability in [0, 1]")));
    }
    Ok(())
}
