use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::{BooleanPoint, MonomialIndex, OracleLimits, SparsePolynomial};
use crate::{Error, Result};

/// A partition of `[n]` into free coordinates and coordinates fixed to
/// `±1`. Restricting a function fixes the latter and leaves a function of
/// the free coordinates only.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Restriction {
    n: usize,
    fixed: BTreeMap<usize, i8>,
}

impl Restriction {
    /// No coordinate fixed.
    pub fn none(n: usize) -> Self {
        Self {
            n,
            fixed: BTreeMap::new(),
        }
    }

    pub fn with_fixed(n: usize, fixed: impl IntoIterator<Item = (usize, i8)>) -> Result<Self> {
        let mut r = Self::none(n);
        for (i, v) in fixed {
            r.fix(i, v)?;
        }
        Ok(r)
    }

    /// Fixes coordinate `i` to `value`. Re-fixing to the same value is a no-op;
    /// changing a fixed value is an error.
    pub fn fix(&mut self, i: usize, value: i8) -> Result<()> {
        if i >= self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: i + 1,
            });
        }
        if value != 1 && value != -1 {
            return Err(Error::Input(format!("fixed value {value} is not ±1")));
        }
        match self.fixed.insert(i, value) {
            Some(old) if old != value => {
                self.fixed.insert(i, old);
                Err(Error::Argument(format!("coordinate {i} already fixed to {old}")))
            }
            _ => Ok(()),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fixed(&self) -> &BTreeMap<usize, i8> {
        &self.fixed
    }

    pub fn num_fixed(&self) -> usize {
        self.fixed.len()
    }

    pub fn num_free(&self) -> usize {
        self.n - self.fixed.len()
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.fixed.contains_key(&i)
    }

    /// Free coordinates in increasing order. Position `j` in this list is
    /// variable `j` of the restricted function.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|i| !self.fixed.contains_key(i)).collect()
    }

    /// Builds the ambient point from an assignment of the free coordinates.
    pub fn merge(&self, free: &BooleanPoint) -> Result<BooleanPoint> {
        free.check_dim(self.num_free())?;
        let mut bits = vec![0i8; self.n];
        for (&i, &v) in &self.fixed {
            bits[i] = v;
        }
        for (j, i) in self.free_indices().into_iter().enumerate() {
            bits[i] = free.get(j);
        }
        BooleanPoint::new(bits)
    }

    /// The free-coordinate part of an ambient point.
    pub fn project(&self, point: &BooleanPoint) -> Result<BooleanPoint> {
        point.check_dim(self.n)?;
        BooleanPoint::new(self.free_indices().into_iter().map(|i| point.get(i)).collect())
    }

    pub fn respects(&self, point: &BooleanPoint) -> bool {
        point.dim() == self.n && self.fixed.iter().all(|(&i, &v)| point.get(i) == v)
    }

    /// Fixed bits copied, free bits independently `+1` with probability `p`.
    pub fn sample<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> BooleanPoint {
        let free = BooleanPoint::bernoulli(self.num_free(), p, rng);
        self.merge(&free).expect("dimensions agree by construction")
    }

    /// Maps a polynomial over the free coordinates back to ambient indices.
    pub fn embed(&self, local: &SparsePolynomial) -> Result<SparsePolynomial> {
        local.check_n(self.num_free())?;
        let free = self.free_indices();
        SparsePolynomial::from_terms(
            self.n,
            local.terms().map(|(s, c)| {
                (
                    MonomialIndex::from_sorted_unchecked(s.vars().iter().map(|&j| free[j]).collect()),
                    c,
                )
            }),
        )
    }
}

impl SparsePolynomial {
    pub(crate) fn check_n(&self, n: usize) -> Result<()> {
        if self.n() == n {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: n,
                found: self.n(),
            })
        }
    }
}

/// Substitutes the fixed coordinates of `r` into `p`.
///
/// The result is a polynomial in the free coordinates, numbered as in
/// [`Restriction::free_indices`]. Monomials that collapse onto the same
/// free variables are merged.
pub fn restrict(p: &SparsePolynomial, r: &Restriction) -> Result<SparsePolynomial> {
    p.check_n(r.n())?;
    let mut local_of = vec![usize::MAX; r.n()];
    for (j, i) in r.free_indices().into_iter().enumerate() {
        local_of[i] = j;
    }
    let mut out = SparsePolynomial::zero(r.num_free());
    for (s, c) in p.terms() {
        let mut sign = 1.0;
        let mut vars = Vec::with_capacity(s.degree());
        for &i in s.vars() {
            match r.fixed().get(&i) {
                Some(&v) => sign *= f64::from(v),
                None => vars.push(local_of[i]),
            }
        }
        out.add_term(MonomialIndex::from_sorted_unchecked(vars), sign * c)?;
    }
    Ok(out)
}

/// Minimizer of a polynomial over the subcube spanned by its own variables.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportMinimum {
    /// `(variable, value)` for every variable appearing in the polynomial,
    /// in increasing variable order.
    pub assignment: Vec<(usize, i8)>,
    pub value: f64,
}

impl SupportMinimum {
    pub fn as_restriction(&self, n: usize) -> Result<Restriction> {
        Restriction::with_fixed(n, self.assignment.iter().copied())
    }
}

const PARALLEL_CHUNK: u64 = 1 << 16;

/// Exhaustively minimizes `p` over `{-1,+1}^support(p)`.
///
/// Assignments are visited in lexicographic order with `-1 < +1` (lowest
/// variable most significant) and only a strictly smaller value replaces
/// the incumbent, so ties go to the lexicographically smallest assignment.
/// Large supports are split into fixed-size chunks evaluated in parallel and
/// reduced in chunk order, which gives the same answer as the serial scan.
pub fn minimize_over_support(p: &SparsePolynomial, limits: &OracleLimits) -> Result<SupportMinimum> {
    let vars: Vec<usize> = p.support_vars().into_iter().collect();
    let k = vars.len();
    if k > limits.support_max_vars {
        return Err(Error::Refused(format!(
            "support has {k} variables; exhaustive minimization is capped at {} (lower the sparsity)",
            limits.support_max_vars
        )));
    }
    let full: u64 = if k == 0 { 0 } else { (1u64 << k) - 1 };
    // Counter bit (k-1-j) holds variable vars[j]; a zero bit means -1.
    let terms: Vec<(u64, f64)> = p
        .terms()
        .map(|(s, c)| {
            let mask = s.vars().iter().fold(0u64, |acc, v| {
                let j = vars.binary_search(v).unwrap();
                acc | 1 << (k - 1 - j)
            });
            (mask, c)
        })
        .collect();
    let value_at = |x: u64| -> f64 {
        let neg = !x & full;
        terms
            .iter()
            .map(|&(mask, c)| if (mask & neg).count_ones() & 1 == 1 { -c } else { c })
            .sum()
    };
    let scan = |lo: u64, hi: u64| -> (u64, f64) {
        let mut best = (lo, value_at(lo));
        for x in lo + 1..hi {
            let v = value_at(x);
            if v < best.1 {
                best = (x, v);
            }
        }
        best
    };
    let total = 1u64 << k;
    let (x, value) = if total <= PARALLEL_CHUNK {
        scan(0, total)
    } else {
        let chunks: Vec<(u64, f64)> = (0..total / PARALLEL_CHUNK)
            .into_par_iter()
            .map(|c| scan(c * PARALLEL_CHUNK, (c + 1) * PARALLEL_CHUNK))
            .collect();
        chunks
            .into_iter()
            .reduce(|best, cand| if cand.1 < best.1 { cand } else { best })
            .unwrap()
    };
    let assignment = vars
        .iter()
        .enumerate()
        .map(|(j, &v)| (v, if x >> (k - 1 - j) & 1 == 1 { 1 } else { -1 }))
        .collect();
    Ok(SupportMinimum { assignment, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[usize]) -> MonomialIndex {
        MonomialIndex::new(v.iter().copied()).unwrap()
    }

    fn poly(n: usize, t: &[(&[usize], f64)]) -> SparsePolynomial {
        SparsePolynomial::from_terms(n, t.iter().map(|(v, c)| (m(v), *c))).unwrap()
    }

    #[test]
    fn restrict_examples() {
        let r = Restriction::with_fixed(2, [(1, -1)]).unwrap();
        assert_eq!(
            restrict(&poly(2, &[(&[0, 1], 1.0)]), &r).unwrap(),
            poly(1, &[(&[0], -1.0)])
        );

        let r = Restriction::with_fixed(2, [(0, 1)]).unwrap();
        assert_eq!(
            restrict(&poly(2, &[(&[0], 3.0)]), &r).unwrap(),
            poly(1, &[(&[], 3.0)])
        );
    }

    #[test]
    fn restrict_merges_terms() {
        let p = poly(2, &[(&[0], 2.0), (&[1], 1.0), (&[0, 1], 1.0)]);
        let r = Restriction::with_fixed(2, [(1, 1)]).unwrap();
        let q = restrict(&p, &r).unwrap();
        assert_eq!(q, poly(1, &[(&[0], 3.0), (&[], 1.0)]));
        for x in 0..2 {
            let free = BooleanPoint::from_index(x, 1);
            let merged = r.merge(&free).unwrap();
            assert_eq!(q.eval(&free).unwrap(), p.eval(&merged).unwrap());
        }
    }

    #[test]
    fn restrict_renumbers_free_coordinates() {
        let p = poly(4, &[(&[1, 3], 2.0), (&[0, 2], 1.0)]);
        let r = Restriction::with_fixed(4, [(0, -1), (2, 1)]).unwrap();
        let q = restrict(&p, &r).unwrap();
        assert_eq!(q, poly(2, &[(&[0, 1], 2.0), (&[], -1.0)]));
        assert_eq!(r.embed(&q).unwrap(), poly(4, &[(&[1, 3], 2.0), (&[], -1.0)]));
    }

    #[test]
    fn restriction_rejects_conflicts() {
        let mut r = Restriction::none(3);
        r.fix(1, 1).unwrap();
        r.fix(1, 1).unwrap();
        assert!(r.fix(1, -1).is_err());
        assert_eq!(r.fixed()[&1], 1);
        assert!(r.fix(3, 1).is_err());
        assert!(restrict(&SparsePolynomial::zero(4), &r).is_err());
    }

    #[test]
    fn minimize_examples() {
        let min = minimize_over_support(
            &poly(2, &[(&[0], 2.0), (&[0, 1], -1.0)]),
            &OracleLimits::default(),
        )
        .unwrap();
        assert_eq!(min.assignment, vec![(0, -1), (1, -1)]);
        assert_eq!(min.value, -3.0);

        let min = minimize_over_support(&poly(3, &[(&[], 7.0)]), &OracleLimits::default()).unwrap();
        assert!(min.assignment.is_empty());
        assert_eq!(min.value, 7.0);

        let min =
            minimize_over_support(&poly(2, &[(&[0], 1.0), (&[1], 1.0)]), &OracleLimits::default()).unwrap();
        assert_eq!(min.assignment, vec![(0, -1), (1, -1)]);
        assert_eq!(min.value, -2.0);
    }

    #[test]
    fn minimize_tie_break_prefers_minus_one() {
        // chi_{1,2}: minimum -1 at (-1,+1) and (+1,-1).
        let min = minimize_over_support(&poly(2, &[(&[0, 1], 1.0)]), &OracleLimits::default()).unwrap();
        assert_eq!(min.assignment, vec![(0, -1), (1, 1)]);
    }

    #[test]
    fn minimize_refuses_large_support() {
        let p = poly(
            30,
            &(0..26)
                .map(|i| (vec![i], 1.0))
                .collect::<Vec<_>>()
                .iter()
                .map(|(v, c)| (&v[..], *c))
                .collect::<Vec<_>>(),
        );
        assert!(matches!(
            minimize_over_support(&p, &OracleLimits::default()),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn parallel_scan_matches_serial_order() {
        // 18 support variables forces the chunked path. Pairwise products with
        // alternating signs create many exact ties.
        let mut terms: Vec<(Vec<usize>, f64)> = Vec::new();
        for i in 0..17 {
            terms.push((vec![i, i + 1], 1.0));
        }
        let p = SparsePolynomial::from_terms(
            18,
            terms
                .iter()
                .map(|(v, c)| (MonomialIndex::new(v.clone()).unwrap(), *c)),
        )
        .unwrap();
        let min = minimize_over_support(&p, &OracleLimits::default()).unwrap();
        // Serial reference.
        let mut best: Option<(Vec<i8>, f64)> = None;
        for x in 0..1u64 << 18 {
            let bits: Vec<i8> = (0..18)
                .map(|j| if x >> (17 - j) & 1 == 1 { 1 } else { -1 })
                .collect();
            let v = p.eval_bits(&bits);
            if best.as_ref().is_none_or(|b| v < b.1) {
                best = Some((bits, v));
            }
        }
        let (bits, v) = best.unwrap();
        assert_eq!(min.value, v);
        assert_eq!(min.assignment.iter().map(|a| a.1).collect::<Vec<_>>(), bits);
        assert_eq!(min.assignment[0], (0, -1));
    }
}
