use alloc::string::String;

/// Errors raised by the analytics core.
///
/// Variants carry enough context to produce an actionable message; the CLI
/// maps [`Error::is_validation`] errors to exit code 1.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("timestamps not strictly increasing at index {index} ({prev} -> {next})")]
    NonMonotone { index: usize, prev: f64, next: f64 },
    #[error("gaze direction at index {index} is not unit length (|d| = {norm})")]
    NotUnit { index: usize, norm: f64 },
    #[error("input too short: need {needed}, got {got}")]
    TooShort { needed: String, got: String },
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("feature set mismatch: model expects {expected} features, row has {got}")]
    FeatureMismatch { expected: usize, got: usize },
    #[error("unknown feature name '{0}'")]
    UnknownFeature(String),
    #[error("need at least {needed} distinct users, got {got}")]
    TooFewUsers { needed: usize, got: usize },
    #[error("single-class data: every label maps to class {0}")]
    SingleClass(usize),
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

impl Error {
    /// True when the error reflects bad caller input rather than a failure
    /// during computation.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::ZeroVariance(_) | Error::SingleClass(_))
    }
}

pub type Result<T> = core::result::Result<T, Error>;
