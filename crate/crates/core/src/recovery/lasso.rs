use super::{check_inputs, MeasurementMatrix, RecoverySolution, SolverOptions};
use crate::Result;

#[inline]
pub(crate) fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Lasso by cyclic coordinate descent:
///
/// `argmin_x ||y - A x||^2 + lambda ||x||_1`
///
/// `A` and `y` are both multiplied by the matrix' scale (see
/// [`MeasurementMatrix::normalized`]), so coefficients stay in the units of
/// `y`. After each full sweep the solver iterates on the active set until it
/// settles, then returns to full sweeps; every sweep counts toward
/// `max_sweeps` and appends to the objective trace.
pub fn lasso(
    a: &MeasurementMatrix,
    y: &[f64],
    lambda: f64,
    opts: &SolverOptions,
) -> Result<RecoverySolution> {
    check_inputs(a, y, lambda)?;
    let scale = a.scale();
    let ys: Vec<f64> = y.iter().map(|v| v * scale).collect();
    let col_norm = a.rows() as f64 * scale * scale;
    let half_lambda = lambda / 2.0;

    let mut x = vec![0.0; a.cols()];
    let mut residual = ys.clone();
    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;

    let objective = |r: &[f64], x: &[f64]| -> f64 {
        r.iter().map(|v| v * v).sum::<f64>() + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    };

    let update = |j: usize, x: &mut [f64], r: &mut [f64]| -> f64 {
        let z = a.col_dot(j, r) + col_norm * x[j];
        let new = soft_threshold(z, half_lambda) / col_norm;
        let delta = new - x[j];
        if delta != 0.0 {
            a.col_axpy(j, -delta, r);
            x[j] = new;
        }
        delta.abs()
    };

    if a.cols() == 0 || col_norm == 0.0 {
        return Ok(RecoverySolution::new(
            x,
            objective(&residual, &[]),
            0,
            true,
            trace,
        ));
    }

    'outer: while sweeps < opts.max_sweeps {
        let mut max_delta = 0.0f64;
        for j in 0..a.cols() {
            max_delta = max_delta.max(update(j, &mut x, &mut residual));
        }
        sweeps += 1;
        // Refresh the residual to keep rounding drift out of long runs.
        let ax = a.mul_vec(&x);
        for ((r, yv), axv) in residual.iter_mut().zip(&ys).zip(&ax) {
            *r = yv - axv;
        }
        trace.push(objective(&residual, &x));
        if max_delta < opts.tol {
            converged = true;
            break;
        }
        let active: Vec<usize> = (0..a.cols()).filter(|&j| x[j] != 0.0).collect();
        loop {
            if sweeps >= opts.max_sweeps {
                break 'outer;
            }
            let mut max_delta = 0.0f64;
            for &j in &active {
                max_delta = max_delta.max(update(j, &mut x, &mut residual));
            }
            sweeps += 1;
            trace.push(objective(&residual, &x));
            if max_delta < opts.tol {
                break;
            }
        }
    }

    let obj = objective(&residual, &x);
    Ok(RecoverySolution::new(x, obj, sweeps, converged, trace))
}

/// Largest violation of the Lasso optimality conditions at `x`:
/// `|a_j^T r| <= lambda/2` for zero coordinates and
/// `a_j^T r = lambda/2 * sign(x_j)` for active ones (scaled system).
pub fn lasso_kkt_violation(a: &MeasurementMatrix, y: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let residual = super::scaled_residual(a, y, x);
    (0..a.cols())
        .map(|j| {
            let g = a.col_dot(j, &residual);
            if x[j] == 0.0 {
                (g.abs() - lambda / 2.0).max(0.0)
            } else {
                (g - lambda / 2.0 * x[j].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}
