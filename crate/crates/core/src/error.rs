use std::fmt;

/// Library error conditions.
#[derive(Debug)]
pub enum KsError {
    /// An argument was outside the documented domain (bad n, NaN input,
    /// probabilities outside [0,1], inconsistent probability pairs, ...).
    InvalidArgument(String),
    /// A mathematical domain violation inside a kernel (non-positive base
    /// passed to a power routine, division by zero, ...).
    Domain(&'static str),
    /// Recombining a scaled value overflowed the binary64 range.
    RangeOverflow,
    /// The root finder exhausted its iteration budget. The partial report
    /// carries the last iterate and counts.
    Convergence(crate::invert::SolveReport),
    /// I/O failure while reading or writing caches / CSV output.
    Io(std::io::Error),
    /// A cache or CSV file did not have the expected layout.
    Format(String),
}

impl fmt::Display for KsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KsError::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            KsError::Domain(m) => write!(f, "domain error: {m}"),
            KsError::RangeOverflow => write!(f, "result overflows binary64 range"),
            KsError::Convergence(r) => write!(
                f,
                "root finder did not converge within {} iterations (last x = {:.17e})",
                r.iterations, r.x
            ),
            KsError::Io(e) => write!(f, "i/o error: {e}"),
            KsError::Format(m) => write!(f, "format error: {m}"),
        }
    }
}

impl std::error::Error for KsError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            KsError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for KsError {
    fn from(e: std::io::Error) -> Self {
        KsError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, KsError>;
