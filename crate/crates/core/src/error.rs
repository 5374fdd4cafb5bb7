use thiserror::Error;

/// Everything that can go wrong inside the library.
///
/// Variants are grouped by the exit class the command-line front end maps
/// them to; see [`Error::class`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid ratio rule: {0}")]
    InvalidRatio(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("digit c_{index} = {digit} is outside [0, b_{index} - 1] = [0, {max}]")]
    DigitOutOfRange {
        index: u64,
        digit: String,
        max: String,
    },

    #[error("digit rule is not canonical: {0}")]
    NonCanonical(String),

    #[error("digit c_{index} is unknown; the point only declares digits up to {known}")]
    UnknownDigit { index: u64, known: u64 },

    #[error("query at {requested} exceeds the declared horizon {horizon}")]
    HorizonExceeded { requested: u64, horizon: u64 },

    #[error("index overflow: {0}")]
    Overflow(String),

    #[error("search limit reached: {0}")]
    ScanLimit(String),

    #[error("certification failed: {0}")]
    Certification(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Precondition,
    Horizon,
    Certification,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse(_) => ErrorClass::Parse,
            Error::UnknownDigit { .. } | Error::HorizonExceeded { .. } | Error::ScanLimit(_) => {
                ErrorClass::Horizon
            }
            Error::Certification(_) => ErrorClass::Certification,
            Error::InvalidRatio(_)
            | Error::Domain(_)
            | Error::Precondition(_)
            | Error::DigitOutOfRange { .. }
            | Error::NonCanonical(_)
            | Error::Overflow(_) => ErrorClass::Precondition,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
