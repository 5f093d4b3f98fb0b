//! Scenery reconstruction toolkit for random walks on finite abelian groups.
//!
//! A binary scenery is a labeling `f: H -> {0,1}` of a finite abelian group
//! `H`. A particle performs a random walk on `H` with step distribution
//! `gamma` and reports the label it sits on at each step. This crate decides
//! whether the walk can reconstruct the scenery up to shift, constructs
//! explicit indistinguishable scenery pairs when it cannot, reconstructs
//! sceneries from spectral statistics when it can, and verifies everything
//! against an exact process-equivalence oracle.
//!
//! Organization:
//! - [`group`]: groups `Z_{n_1}^{d_1} x ... x Z_{n_m}^{d_m}` and exact
//!   element arithmetic.
//! - [`cyclotomic`]: exact arithmetic in `Q(w_{p_1}, ..., w_{p_m})`, so
//!   Fourier-coefficient equality is decided symbolically.
//! - [`numeric`]: arbitrary-precision dyadic floats for the numeric path.
//! - [`walk`]: step distributions, Fourier tables, collision search,
//!   drift and bounded-support criteria, and the reconstructibility verdict.
//! - [`scenery`]: sceneries, their transforms, and indistinguishable-pair
//!   constructions for every collision shape.
//! - [`spectral`]: autocorrelations, multispectra, Vandermonde solves and
//!   constructive recovery of a scenery up to shift.
//! - [`oracle`]: exact decision procedure for equality of observation
//!   processes, equivalence-class enumeration, verdict cross-validation.
//! - [`sim`]: seeded simulation, coupled walks, empirical statistics.
//! - [`formats`]: file formats used by the command-line tool.

pub mod cyclotomic;
pub(crate) mod linalg;
pub mod error;
pub mod formats;
pub mod group;
pub mod numeric;
pub mod oracle;
pub mod scenery;
pub mod sim;
pub mod spectral;
pub mod walk;

pub use error::{Error, Result};
pub use group::{GroupElement, GroupSpec};
