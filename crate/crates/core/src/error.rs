use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("field domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{op}: enumeration of {needed} elements exceeds budget {budget}")]
    BudgetExceeded {
        op: &'static str,
        needed: f64,
        budget: u64,
    },

    #[error("{0}: target vector is not in the image of the encoder")]
    NotInImage(&'static str),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },

    #[error("{0}: count overflow")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

/// Fails with [`Error::BudgetExceeded`] when `needed` exceeds `budget`.
///
/// `needed` is a float so that products like `q^n * |Z|^n` can be checked
/// without overflowing an integer first.
pub(crate) fn check_budget(op: &'static str, needed: f64, budget: u64) -> Result<()> {
    if needed > budget as f64 {
        Err(Error::BudgetExceeded { op, needed, budget })
    } else {
        Ok(())
    }
}
