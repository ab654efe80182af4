use std::fmt::Write as _;

use rayon::prelude::*;

use crate::fourier::{BasisFamily, BooleanPoint, MonomialIndex};
use crate::{Error, Result};

/// A `±1` measurement matrix, stored column-major, with an optional uniform
/// scale applied to every entry (and, by the solvers, to the observations).
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
    scale: f64,
    labels: Option<Vec<MonomialIndex>>,
}

/// Graph-sampling matrix: `A[l][k] = chi_{S_k}(points[l])`, columns in the
/// basis' canonical order.
pub fn build_sampling_matrix(points: &[BooleanPoint], basis: &BasisFamily) -> Result<MeasurementMatrix> {
    for p in points {
        p.check_dim(basis.n())?;
    }
    let rows = points.len();
    let mut data = vec![0i8; rows * basis.len()];
    if rows > 0 {
        data.par_chunks_mut(rows)
            .zip(basis.indices().par_iter())
            .for_each(|(col, s)| {
                for (entry, p) in col.iter_mut().zip(points) {
                    *entry = s.parity(p.bits());
                }
            });
    }
    Ok(MeasurementMatrix {
        rows,
        cols: basis.len(),
        data,
        scale: 1.0,
        labels: Some(basis.indices().to_vec()),
    })
}

impl MeasurementMatrix {
    /// From row-major `±1` rows.
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let m = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = vec![0i8; m * cols];
        for (l, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    found: row.len(),
                });
            }
            for (k, &v) in row.iter().enumerate() {
                if v != 1 && v != -1 {
                    return Err(Error::Input(format!("entry ({l},{k}) is {v}, not ±1")));
                }
                data[k * m + l] = v;
            }
        }
        Ok(Self {
            rows: m,
            cols,
            data,
            scale: 1.0,
            labels: None,
        })
    }

    /// Scales rows by `1/sqrt(m)`, so every column has unit norm.
    pub fn normalized(mut self) -> Self {
        self.scale = if self.rows == 0 {
            1.0
        } else {
            1.0 / (self.rows as f64).sqrt()
        };
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn labels(&self) -> Option<&[MonomialIndex]> {
        self.labels.as_deref()
    }

    /// Unscaled `±1` entry.
    pub fn sign(&self, row: usize, col: usize) -> i8 {
        self.data[col * self.rows + row]
    }

    /// Scaled entry.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.scale * f64::from(self.sign(row, col))
    }

    pub fn column(&self, col: usize) -> &[i8] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    /// Scaled `a_col . v`.
    #[inline]
    pub fn col_dot(&self, col: usize, v: &[f64]) -> f64 {
        let s: f64 = self
            .column(col)
            .iter()
            .zip(v)
            .map(|(&a, &x)| f64::from(a) * x)
            .sum();
        s * self.scale
    }

    /// `v += alpha * a_col` (scaled).
    #[inline]
    pub fn col_axpy(&self, col: usize, alpha: f64, v: &mut [f64]) {
        let a = alpha * self.scale;
        for (x, &s) in v.iter_mut().zip(self.column(col)) {
            *x += a * f64::from(s);
        }
    }

    /// Scaled `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (k, &xk) in x.iter().enumerate() {
            if xk != 0.0 {
                self.col_axpy(k, xk, &mut out);
            }
        }
        out
    }

    /// Scaled `A^T v`.
    pub fn t_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.cols).map(|k| self.col_dot(k, v)).collect()
    }

    /// Reorders rows; `perm[i]` is the source row of output row `i`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut data = vec![0i8; self.data.len()];
        for k in 0..self.cols {
            for (i, &src) in perm.iter().enumerate() {
                data[k * self.rows + i] = self.sign(src, k);
            }
        }
        Self { data, ..self.clone() }
    }

    /// Plain-text dump: one row per line, unscaled entries separated by spaces.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        for l in 0..self.rows {
            for k in 0..self.cols {
                if k > 0 {
                    out.push(' ');
                }
                write!(out, "{}", self.sign(l, k)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, line)| {
                line.split_whitespace()
                    .map(|t| {
                        t.parse::<i8>()
                            .map_err(|_| Error::Input(format!("matrix dump line {}: bad entry {t:?}", i + 1)))
                    })
                    .collect::<Result<Vec<i8>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }
}

/// Space-separated vector dump.
pub fn format_vector(v: &[f64]) -> String {
    let mut out = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    out.push('\n');
    out
}

/// Parses whitespace-separated reals (newlines allowed).
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Input(format!("bad vector entry {t:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_matrix_examples() {
        let basis = BasisFamily::enumerate(2, 2).unwrap();
        let a = build_sampling_matrix(&[BooleanPoint::new(vec![1, -1]).unwrap()], &basis).unwrap();
        assert_eq!(
            (0..4).map(|k| a.sign(0, k)).collect::<Vec<_>>(),
            vec![1, 1, -1, -1]
        );

        let basis = BasisFamily::enumerate(5, 2).unwrap();
        let pts: Vec<_> = (0..32).map(|x| BooleanPoint::from_index(x, 5)).collect();
        let a = build_sampling_matrix(&pts, &basis).unwrap();
        assert!(a.column(0).iter().all(|&v| v == 1));
        assert!((0..a.cols()).all(|k| a.sign(0, k) == 1));
        for (l, p) in pts.iter().enumerate() {
            for (k, s) in basis.indices().iter().enumerate() {
                assert_eq!(a.sign(l, k), s.parity(p.bits()));
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let basis = BasisFamily::enumerate(3, 1).unwrap();
        assert!(build_sampling_matrix(&[BooleanPoint::filled(2, 1)], &basis).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let a = MeasurementMatrix::from_rows(&[vec![1, -1, 1], vec![-1, -1, 1]]).unwrap();
        assert_eq!(a.to_dump(), "1 -1 1\n-1 -1 1\n");
        assert_eq!(MeasurementMatrix::parse_dump(&a.to_dump()).unwrap(), a);
        assert!(MeasurementMatrix::parse_dump("1 0\n").is_err());
        assert!(MeasurementMatrix::parse_dump("1 1\n1\n").is_err());
        assert_eq!(
            parse_vector(&format_vector(&[0.5, -2.0])).unwrap(),
            vec![0.5, -2.0]
        );
    }

    #[test]
    fn normalization_gives_unit_columns() {
        let a = MeasurementMatrix::from_rows(&[vec![1, -1], vec![1, 1], vec![-1, 1], vec![1, 1]])
            .unwrap()
            .normalized();
        for k in 0..2 {
            let norm: f64 = (0..4).map(|l| a.entry(l, k).powi(2)).sum();
            assert!((norm - 1.0).abs() < 1e-15);
        }
    }
}
