//! Measurement matrices and the sparse-recovery solvers.
//!
//! Both solvers work on the system `(s A, s y)` where `s` is the matrix
//! scale: `1` for a raw matrix, `1/sqrt(m)` after
//! [`MeasurementMatrix::normalized`]. Scaling both sides keeps the recovered
//! coefficients in the units of the observations while making `lambda`
//! independent of the number of measurements.

mod group_lasso;
mod lasso;
mod matrix;

pub use group_lasso::{group_kkt_violation, group_lasso, ColumnGroup, GroupStructure};
pub use lasso::{lasso, lasso_kkt_violation};
pub use matrix::{build_sampling_matrix, format_vector, parse_vector, MeasurementMatrix};

use serde::{Deserialize, Serialize};

use crate::fourier::{BasisFamily, SparsePolynomial};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Convergence threshold on the largest coefficient change in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySolution {
    /// One coefficient per matrix column.
    pub coefficients: Vec<f64>,
    /// Objective value at `coefficients`, on the scaled system.
    pub objective: f64,
    /// Sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every sweep.
    pub objective_trace: Vec<f64>,
}

impl RecoverySolution {
    fn new(
        coefficients: Vec<f64>,
        objective: f64,
        iterations: usize,
        converged: bool,
        objective_trace: Vec<f64>,
    ) -> Self {
        Self {
            coefficients,
            objective,
            iterations,
            converged,
            objective_trace,
        }
    }

    pub fn num_nonzero(&self) -> usize {
        self.coefficients.iter().filter(|c| **c != 0.0).count()
    }
}

fn check_inputs(a: &MeasurementMatrix, y: &[f64], lambda: f64) -> Result<()> {
    if y.len() != a.rows() {
        return Err(Error::Dimension {
            expected: a.rows(),
            found: y.len(),
        });
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!("observation {i} is {}", y[i])));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Argument(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(())
}

fn scaled_residual(a: &MeasurementMatrix, y: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    y.iter().zip(&ax).map(|(yv, axv)| yv * a.scale() - axv).collect()
}

/// Keeps the `s` coefficients of largest magnitude as a polynomial over the
/// basis. Ties are broken by canonical basis order; zero coefficients are
/// never kept.
pub fn top_s(sol: &RecoverySolution, s: usize, basis: &BasisFamily) -> Result<SparsePolynomial> {
    select_top(sol, s, basis, false)
}

/// Like [`top_s`], but the constant term is always kept (when non-zero) and
/// does not count towards `s`. The intercept never moves a minimizer, so
/// ranking it against the other terms would only waste a slot.
pub fn top_s_nonconstant(sol: &RecoverySolution, s: usize, basis: &BasisFamily) -> Result<SparsePolynomial> {
    select_top(sol, s, basis, true)
}

fn select_top(
    sol: &RecoverySolution,
    s: usize,
    basis: &BasisFamily,
    free_constant: bool,
) -> Result<SparsePolynomial> {
    if s == 0 {
        return Err(Error::Argument("sparsity s must be at least 1".into()));
    }
    if sol.coefficients.len() != basis.len() {
        return Err(Error::Dimension {
            expected: basis.len(),
            found: sol.coefficients.len(),
        });
    }
    let mut order: Vec<usize> = (0..basis.len()).filter(|&k| sol.coefficients[k] != 0.0).collect();
    order.sort_by(|&i, &j| {
        sol.coefficients[j]
            .abs()
            .total_cmp(&sol.coefficients[i].abs())
            .then(i.cmp(&j))
    });
    let mut constant = None;
    if free_constant {
        if let Some(pos) = order.iter().position(|&k| basis.get(k).is_empty()) {
            constant = Some(order.remove(pos));
        }
    }
    order.truncate(s);
    order.extend(constant);
    SparsePolynomial::from_terms(
        basis.n(),
        order
            .into_iter()
            .map(|k| (basis.get(k).clone(), sol.coefficients[k])),
    )
}
