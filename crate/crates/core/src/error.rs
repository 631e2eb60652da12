use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// Truncation too shallow for the requested accuracy.
    #[error("insufficient precision: {what} (required order {required})")]
    Precision { what: String, required: usize },

    #[error("symbol is not in the Schur class: {0}")]
    NotSchur(String),

    #[error("precondition `{name}` violated: residual {residual:.3e} exceeds {tolerance:.1e}")]
    Precondition {
        name: &'static str,
        residual: f64,
        tolerance: f64,
    },

    /// The pair fails the orthogonality condition required for a model decomposition.
    #[error("verdict is false: ||P_inf S2|E|| = {r_iii:.6e}")]
    Verdict { r_iii: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
