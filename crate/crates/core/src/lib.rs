//! Black-box minimization over Boolean-encoded search spaces.
//!
//! An expensive objective `f: {-1,+1}^n -> R` is approximated by a sparse,
//! low-degree polynomial in the parity (Fourier) basis, recovered from a
//! small number of evaluations with Lasso or Group Lasso. The minimizer of
//! the recovered polynomial restricts the search to a smaller subcube.
//!
//! Two drivers sit on top of that primitive:
//!
//! - [`scheduler::pgsr_hb`]: Hyperband whose sampler switches to
//!   group-sparse recovery once enough evaluation history exists.
//! - [`conas::conas_search`]: multi-stage recover-and-restrict search over
//!   cell-architecture encoders.

pub mod conas;
pub mod encoding;
mod error;
pub mod evaluators;
pub mod experiments;
pub mod fourier;
pub mod recovery;
pub mod rng;
pub mod scheduler;

pub use error::{Error, Result};
pub use fourier::{BasisFamily, BooleanPoint, MonomialIndex, Restriction, SparsePolynomial};
