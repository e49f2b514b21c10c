use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("family is degenerate: {0}")]
    NondegenerateFamilyRequired(String),

    #[error("size guard exceeded: {what} needs {needed} entries, cap is {cap}")]
    TooLarge {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("observable is incompatible with system: {0}")]
    Incompatible(String),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
