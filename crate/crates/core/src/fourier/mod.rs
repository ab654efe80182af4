//! Parity basis, sparse polynomials over `{-1,+1}^n`, restrictions, and the
//! exhaustive oracles (exact transform, subcube minimization).

mod monomial;
mod point;
mod polynomial;
mod restriction;
mod transform;

pub use monomial::{basis_size, parity_eval, BasisFamily, MonomialIndex};
pub use point::BooleanPoint;
pub use polynomial::SparsePolynomial;
pub use restriction::{minimize_over_support, restrict, Restriction, SupportMinimum};
pub use transform::{brute_force_transform, full_table, OracleLimits, ZERO_TOL};
