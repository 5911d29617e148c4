//! Error taxonomy shared across the crate.
//!
//! The variants distinguish *what kind* of failure occurred so that callers
//! (in particular the CLI) can map them to exit statuses:
//! - [`Error::Validation`] / [`Error::Domain`]: malformed input or arguments
//!   outside an operation's domain.
//! - [`Error::Stratum`], [`Error::Central`], [`Error::Degenerate`],
//!   [`Error::Admissibility`], [`Error::Numerical`]: mathematically valid
//!   input on which the requested quantity is undefined or numerically
//!   unreliable (rank-deficient states, the maximally mixed state, degenerate
//!   spectra, meshes too coarse for the discrete formulas, failed convergence).

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Structurally malformed input: wrong dimensions, broken invariants,
    /// unparseable data, unknown configuration keys.
    #[error("validation error: {0}")]
    Validation(String),

    /// Arguments outside an operation's domain (e.g. non-positive
    /// temperature, grid too small).
    #[error("domain error: {0}")]
    Domain(String),

    /// The input lies on a rank stratum where the operation is undefined
    /// (rank-deficient density matrix, singular amplitude, pure state where
    /// full rank is required).
    #[error("stratum error: {0}")]
    Stratum(String),

    /// The input coincides with the maximally mixed state, where direction
    /// fields and degrees are undefined.
    #[error("central-state error: {0}")]
    Central(String),

    /// A spectral gap or Sylvester solve is degenerate, so eigenbasis
    /// constructions are ill-posed.
    #[error("degenerate-spectrum error: {0}")]
    Degenerate(String),

    /// The discretization is too coarse (or a loop too wild) for the
    /// discrete formula to be trusted: holonomies far from the identity,
    /// near-orthogonal consecutive loop samples, integrality residuals
    /// above threshold.
    #[error("admissibility error: {0}")]
    Admissibility(String),

    /// An iterative or stability-guarded numerical procedure failed
    /// (non-convergence, step size too large for the stiffness bound).
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors that indicate malformed *input* rather than a
    /// well-formed input outside the operation's mathematical domain of
    /// definition.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Domain(_))
    }
}
