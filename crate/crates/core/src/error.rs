use thiserror::Error;

/// Library error type. Variants map onto the failure classes the public ops
/// can hit; everything carries a human-readable diagnostic.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("plant equilibrium solve failed: {0}")]
    PlantSolve(String),

    #[error("probing-frequency conditions violated: {0}")]
    FrequencyViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Returns a numerical-domain error unless every entry of `values` is finite.
pub(crate) fn ensure_finite(context: &str, values: &[f64]) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NumericalDomain(format!(
                "{context} produced non-finite value {v} at index {i}"
            )));
        }
    }
    Ok(())
}
