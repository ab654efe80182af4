use super::{BooleanPoint, MonomialIndex, SparsePolynomial};
use crate::{Error, Result};

/// Coefficients with magnitude at or below this are treated as zero after an
/// exact transform.
pub const ZERO_TOL: f64 = 1e-12;

/// Size caps for the exhaustive routines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    /// Largest `n` accepted by [`brute_force_transform`].
    pub transform_max_n: usize,
    /// Largest number of support variables accepted by
    /// [`minimize_over_support`](super::minimize_over_support).
    pub support_max_vars: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            transform_max_n: 20,
            support_max_vars: 25,
        }
    }
}

/// Tabulates `f` over all `2^n` vertices in [`BooleanPoint::from_index`] order.
pub fn full_table(n: usize, f: impl Fn(&BooleanPoint) -> f64) -> Vec<f64> {
    assert!(n < 64);
    (0..1u64 << n)
        .map(|x| f(&BooleanPoint::from_index(x, n)))
        .collect()
}

/// Exact Fourier transform by direct averaging,
/// `f^(S) = 2^-n sum_a f(a) chi_S(a)`, for every `S`.
///
/// This is the reference every recovery routine is tested against, so it
/// deliberately avoids any fast-transform shortcut: cost is `4^n`.
pub fn brute_force_transform(table: &[f64], limits: &OracleLimits) -> Result<SparsePolynomial> {
    let size = table.len();
    if !size.is_power_of_two() {
        return Err(Error::Input(format!(
            "evaluation table has {size} entries; expected 2^n"
        )));
    }
    let n = size.trailing_zeros() as usize;
    if n > limits.transform_max_n {
        return Err(Error::Refused(format!(
            "brute-force transform over n = {n} variables exceeds the oracle cap of {}",
            limits.transform_max_n
        )));
    }
    let scale = 1.0 / size as f64;
    let mut terms = Vec::new();
    for s_mask in 0..size {
        // chi_S(a) = (-1)^{|S ∩ {i : a_i = -1}|}, and bit i of the table
        // index marks a_i = -1.
        let sum: f64 = table
            .iter()
            .enumerate()
            .map(|(x, &v)| if (s_mask & x).count_ones() & 1 == 1 { -v } else { v })
            .sum();
        let coef = sum * scale;
        if coef.abs() > ZERO_TOL {
            let vars = (0..n).filter(|i| s_mask >> i & 1 == 1);
            terms.push((MonomialIndex::new(vars)?, coef));
        }
    }
    SparsePolynomial::from_terms(n, terms)
}
