use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::{BooleanPoint, MonomialIndex};
use crate::{Error, Result};

/// A real multilinear polynomial in the parity basis: `sum_S c_S chi_S`.
///
/// Terms are kept in canonical order and zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsePolynomial {
    n: usize,
    terms: BTreeMap<MonomialIndex, f64>,
}

impl SparsePolynomial {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(MonomialIndex::empty(), c)
            .expect("empty index fits any n");
        p
    }

    /// Collects terms, summing repeated monomials.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (MonomialIndex, f64)>) -> Result<Self> {
        let mut p = Self::zero(n);
        for (s, c) in terms {
            p.add_term(s, c)?;
        }
        Ok(p)
    }

    pub fn add_term(&mut self, s: MonomialIndex, c: f64) -> Result<()> {
        s.check_dim(self.n)?;
        if !c.is_finite() {
            return Err(Error::Input(format!("coefficient of {s:?} is {c}")));
        }
        match self.terms.entry(s) {
            Entry::Vacant(v) => {
                if c != 0.0 {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Same as [`is_zero`](Self::is_zero).
    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn coefficient(&self, s: &MonomialIndex) -> f64 {
        self.terms.get(s).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonomialIndex, f64)> {
        self.terms.iter().map(|(s, &c)| (s, c))
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(MonomialIndex::degree).max().unwrap_or(0)
    }

    /// Variables that appear in at least one term.
    pub fn support_vars(&self) -> BTreeSet<usize> {
        self.terms.keys().flat_map(|s| s.vars().iter().copied()).collect()
    }

    /// True when no term depends on any variable.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(MonomialIndex::is_empty)
    }

    pub fn eval(&self, point: &BooleanPoint) -> Result<f64> {
        point.check_dim(self.n)?;
        Ok(self.eval_bits(point.bits()))
    }

    pub(crate) fn eval_bits(&self, bits: &[i8]) -> f64 {
        self.terms
            .iter()
            .map(|(s, &c)| c * f64::from(s.parity(bits)))
            .sum()
    }

    /// Drops terms with `|c| <= tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.terms.retain(|_, c| c.abs() > tol);
        self
    }

    /// Largest absolute coefficient difference over the union of supports.
    pub fn max_abs_diff(&self, other: &SparsePolynomial) -> f64 {
        self.terms
            .keys()
            .chain(other.terms.keys())
            .map(|s| (self.coefficient(s) - other.coefficient(s)).abs())
            .fold(0.0, f64::max)
    }

    /// One `vars : coefficient` line per term in canonical order. Variables
    /// are written 1-based and comma-separated; the constant term is `0`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, c) in &self.terms {
            let vars = if s.is_empty() {
                "0".to_string()
            } else {
                s.vars().iter().map(|v| v + 1).join(",")
            };
            writeln!(out, "{vars} : {c}").unwrap();
        }
        out
    }

    /// Inverse of [`to_text`](Self::to_text). Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut p = Self::zero(n);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| Error::Input(format!("line {}: {msg}: {raw:?}", lineno + 1));
            let (lhs, rhs) = line.split_once(':').ok_or_else(|| bad("missing ':'"))?;
            let c: f64 = rhs.trim().parse().map_err(|_| bad("bad coefficient"))?;
            let lhs = lhs.trim();
            let s = if lhs == "0" {
                MonomialIndex::empty()
            } else {
                let vars = lhs
                    .split(',')
                    .map(|v| match v.trim().parse::<usize>() {
                        Ok(v) if v >= 1 => Ok(v - 1),
                        _ => Err(bad("bad variable index")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                MonomialIndex::new(vars).map_err(|_| bad("repeated variable"))?
            };
            if p.terms.contains_key(&s) {
                return Err(bad("duplicate monomial"));
            }
            p.add_term(s, c).map_err(|e| bad(&e.to_string()))?;
        }
        Ok(p)
    }
}
