use std::cmp::Ordering;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::BooleanPoint;
use crate::{Error, Result};

/// A set `S` of variable indices (0-based, strictly increasing) naming the
/// parity function `chi_S(a) = prod_{i in S} a_i`.
///
/// Ordered canonically: by degree, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MonomialIndex(Vec<usize>);

impl MonomialIndex {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Builds an index set from variables in any order. Duplicates are an error.
    pub fn new(vars: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut vars: Vec<usize> = vars.into_iter().collect();
        vars.sort_unstable();
        if vars.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument(format!(
                "monomial has a repeated variable: {vars:?}"
            )));
        }
        Ok(Self(vars))
    }

    pub(crate) fn from_sorted_unchecked(vars: Vec<usize>) -> Self {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
        Self(vars)
    }

    pub fn vars(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest variable index, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self.max_var() {
            Some(v) if v >= n => Err(Error::Dimension {
                expected: n,
                found: v + 1,
            }),
            _ => Ok(()),
        }
    }

    /// `chi_S` on raw sign bits; no bounds checking beyond slice indexing.
    #[inline]
    pub fn parity(&self, bits: &[i8]) -> i8 {
        self.0.iter().fold(1i8, |acc, &i| acc * bits[i])
    }
}

impl Ord for MonomialIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MonomialIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MonomialIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().join(","))
    }
}

/// Evaluates the parity function `chi_S` at `point`.
pub fn parity_eval(s: &MonomialIndex, point: &BooleanPoint) -> Result<f64> {
    s.check_dim(point.dim())?;
    Ok(f64::from(s.parity(point.bits())))
}

/// Number of monomials of degree at most `d` in `n` variables.
pub fn basis_size(n: usize, d: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for l in 0..=d.min(n) {
        total += binom;
        binom = binom * (n - l) as u128 / (l + 1) as u128;
    }
    total
}

/// All parity functions of degree at most `d` over `n` variables, in
/// canonical order. Column `k` of every measurement matrix is `indices[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisFamily {
    n: usize,
    d: usize,
    indices: Vec<MonomialIndex>,
}

impl BasisFamily {
    pub fn enumerate(n: usize, d: usize) -> Result<Self> {
        if d > n {
            return Err(Error::Argument(format!("basis degree {d} exceeds dimension {n}")));
        }
        let indices = (0..=d)
            .flat_map(|l| (0..n).combinations(l))
            .map(MonomialIndex::from_sorted_unchecked)
            .collect();
        Ok(Self { n, d, indices })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MonomialIndex] {
        &self.indices
    }

    pub fn get(&self, k: usize) -> &MonomialIndex {
        &self.indices[k]
    }

    /// Column of `s`, if it belongs to the family.
    pub fn position(&self, s: &MonomialIndex) -> Option<usize> {
        self.indices.binary_search(s).ok()
    }
}
