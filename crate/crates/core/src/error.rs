use thiserror::Error;

/// Errors raised by the lattice, enumeration and certification layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("unknown surface type {0} (expected 1..=7)")]
    UnknownSurfaceType(u32),

    #[error("class ({a},{b}) is not ample")]
    NotAmple { a: i64, b: i64 },

    #[error("exceptional arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },

    #[error("k = 1 is certified externally (1-very ampleness of (3,3)), not by this engine")]
    ExternallyCertified,

    #[error("jet order k = {0} is below the supported range")]
    UnsupportedK(u32),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("label {0} has no correction divisor")]
    NoCorrection(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal cross-check failed: {0}")]
    CrossCheck(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Overflow(_) => "overflow",
            Error::CrossCheck(_) => "cross_check",
            Error::Io(_) => "io",
            Error::ExternallyCertified => "externally_certified",
            Error::UnknownSurfaceType(_)
            | Error::UnsupportedK(_)
            | Error::InvalidInput(_)
            | Error::InvalidConfiguration(_) => "invalid_config",
            Error::NotAmple { .. } | Error::ArityMismatch { .. } | Error::NoCorrection(_) => "internal",
        }
    }
}
