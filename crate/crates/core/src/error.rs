//! Crate-wide error type.

/// Errors produced by the numerical routines in this crate.
///
/// The variants are grouped so that callers (notably the CLI) can map them
/// onto coarse exit categories: bad inputs, a refusal to sample from an
/// improper posterior, and genuine numerical failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A dataset, configuration, or input file failed validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A linear system was singular or a design matrix rank deficient.
    #[error("singular system: {0}")]
    Singular(String),

    /// An iterative scheme exhausted its iteration budget.
    #[error("failed to converge: {0}")]
    NoConvergence(String),

    /// An integral failed to stabilize under adaptive refinement, which for
    /// the prior normalizer signals a non-integrable density.
    #[error("integral diverged: {0}")]
    DivergenceDetected(String),

    /// No subset satisfying the requested non-singularity constraint exists.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Sampling was refused because the requested prior yields an improper
    /// posterior on the given data dimensions.
    #[error("improper posterior: {reason}")]
    ImproperPosterior {
        reason: String,
        /// The threshold below which prior mass on the degrees of freedom
        /// makes the posterior non-integrable.
        critical_nu: f64,
    },

    /// Errors from reading or writing files.
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn singular(msg: impl Into<String>) -> Self {
        Error::Singular(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
