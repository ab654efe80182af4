use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A vertex of the hypercube `{-1,+1}^n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct BooleanPoint(Vec<i8>);

impl BooleanPoint {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if let Some((i, b)) = bits.iter().enumerate().find(|(_, &b)| b != 1 && b != -1) {
            return Err(Error::Input(format!(
                "coordinate {i} is {b}; hypercube entries must be -1 or +1"
            )));
        }
        Ok(Self(bits))
    }

    pub fn filled(n: usize, value: i8) -> Self {
        assert!(value == 1 || value == -1);
        Self(vec![value; n])
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self(bits.iter().map(|&b| if b { 1 } else { -1 }).collect())
    }

    /// Vertex number `index` in the table order used by the exhaustive
    /// routines: bit `i` of `index` set means coordinate `i` is `-1`.
    pub fn from_index(index: u64, n: usize) -> Self {
        assert!(n <= 64);
        Self((0..n).map(|i| if index >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn to_index(&self) -> u64 {
        assert!(self.dim() <= 64);
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| if b < 0 { acc | 1 << i } else { acc })
    }

    /// Each coordinate is `+1` with probability `p`.
    pub fn bernoulli<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        Self((0..n).map(|_| if rng.random_bool(p) { 1 } else { -1 }).collect())
    }

    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::bernoulli(n, 0.5, rng)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn bits(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: i8) {
        assert!(value == 1 || value == -1);
        self.0[i] = value;
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|b| -b).collect())
    }

    pub fn count_active(&self) -> usize {
        self.0.iter().filter(|&&b| b > 0).count()
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() == n {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: n,
                found: self.dim(),
            })
        }
    }

    /// Number of coordinates where the two points differ.
    pub fn hamming(&self, other: &BooleanPoint) -> Result<usize> {
        other.check_dim(self.dim())?;
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }
}

impl TryFrom<Vec<i8>> for BooleanPoint {
    type Error = Error;

    fn try_from(bits: Vec<i8>) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<BooleanPoint> for Vec<i8> {
    fn from(p: BooleanPoint) -> Self {
        p.0
    }
}

impl fmt::Debug for BooleanPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BooleanPoint({self})")
    }
}

/// Renders as a string of `+` and `-`.
impl fmt::Display for BooleanPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_sign_entries() {
        assert!(BooleanPoint::new(vec![1, 0, -1]).is_err());
        assert!(BooleanPoint::new(vec![1, -1, -1]).is_ok());
        assert!(serde_json::from_str::<BooleanPoint>("[1,2]").is_err());
    }

    #[test]
    fn index_round_trip() {
        for x in 0..32u64 {
            assert_eq!(BooleanPoint::from_index(x, 5).to_index(), x);
        }
        assert_eq!(BooleanPoint::from_index(0b01, 2).bits(), &[-1, 1]);
    }

    #[test]
    fn hamming_distance() {
        let mut a = BooleanPoint::filled(140, 1);
        a.set(3, -1);
        assert_eq!(a.hamming(&a).unwrap(), 0);
        assert_eq!(a.hamming(&a.negated()).unwrap(), 140);
        assert!(a.hamming(&BooleanPoint::filled(3, 1)).is_err());
    }

    #[test]
    fn display() {
        assert_eq!(BooleanPoint::new(vec![1, -1, 1]).unwrap().to_string(), "+-+");
    }
}
