//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by group arithmetic, walk analysis, scenery
/// construction, the equivalence oracle and the spectral pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Two values belong to different groups (or contexts) and cannot be combined.
    #[error("structure mismatch: {0}")]
    Mismatch(String),

    /// An argument violates a precondition of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured capacity (enumeration cap, dense-table cap, ...) was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Exact cyclotomic arithmetic is unavailable for this group; the numeric
    /// path must be used instead.
    #[error("exact transform unavailable: factor Z_{modulus} is not an odd prime distinct from the other factors")]
    FallbackRequired { modulus: u64 },

    /// A linear system is singular because Fourier coefficients collide.
    #[error("singular system: Fourier coefficients are not distinct ({0})")]
    Singular(String),

    /// A result contradicts a guarantee of the underlying theory; indicates a bug.
    #[error("internal consistency violation: {0}")]
    Inconsistency(String),

    /// Malformed textual input (group strings, walk files, scenery files).
    #[error("parse error: {0}")]
    Parse(String),

    /// A numeric result failed a consistency assertion (e.g. a quantity that
    /// must be a nonnegative integer was not).
    #[error("numerical consistency failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
