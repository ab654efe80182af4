//! Compressive architecture search: sample encoders, recover a sparse
//! surrogate, fix its minimizer, repeat on the remaining bits.

mod space;

pub use space::{
    decode_cells, encode_cells, hamming, repair_cell, ArchitectureSpace, ArchitectureSpec, CellEdge,
    CellGraph, CellSpec, EdgeSlot, DEFAULT_OPS, IDENTITY,
};

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::evaluators::{Dispatcher, EvalRequest, EvaluationHistory, EvaluationRecord, Objective};
use crate::fourier::{
    minimize_over_support, BasisFamily, BooleanPoint, OracleLimits, Restriction, SparsePolynomial,
};
use crate::recovery::{build_sampling_matrix, lasso, top_s_nonconstant, SolverOptions};
use crate::rng::stream;
use crate::{Error, Result};

/// Fixed bits copied from `restriction`, free bits `+1` with probability `p`.
pub fn sample_encoder<R: Rng + ?Sized>(
    restriction: &Restriction,
    p: f64,
    rng: &mut R,
) -> Result<BooleanPoint> {
    space::check_probability(p)?;
    Ok(restriction.sample(p, rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConasConfig {
    /// Measurements per stage.
    pub m: usize,
    /// Number of recover-and-restrict stages.
    pub stages: usize,
    /// Non-constant terms kept in the surrogate.
    pub sparsity: usize,
    pub degree: usize,
    pub lambda: f64,
    /// Bernoulli parameter for free bits.
    pub p: f64,
    pub solver: SolverOptions,
}

impl Default for ConasConfig {
    fn default() -> Self {
        Self {
            m: 1000,
            stages: 1,
            sparsity: 10,
            degree: 2,
            lambda: 1.0,
            p: 0.5,
            solver: SolverOptions::default(),
        }
    }
}

impl ConasConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::Argument("conas.m must be at least 1".into()));
        }
        if self.stages < 1 {
            return Err(Error::Argument("conas.stages must be at least 1".into()));
        }
        if self.sparsity < 1 {
            return Err(Error::Argument("conas.sparsity must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Argument(format!(
                "conas.lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        space::check_probability(self.p)
    }
}

/// Surrogate and minimizer recovered from one measurement set.
#[derive(Clone, Debug, PartialEq)]
pub struct StageSolution {
    /// Kept terms over the measured coordinates.
    pub surrogate: SparsePolynomial,
    /// Minimizer of the surrogate on its own support, `(variable, value)`.
    pub assignment: Vec<(usize, i8)>,
    pub surrogate_min: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Lasso on the degree-`d` parity basis followed by top-`s` truncation and
/// exhaustive minimization over the surviving variables.
pub fn solve_measurements(
    points: &[BooleanPoint],
    y: &[f64],
    sparsity: usize,
    degree: usize,
    lambda: f64,
    solver: &SolverOptions,
    limits: &OracleLimits,
) -> Result<StageSolution> {
    let n = points
        .first()
        .ok_or_else(|| Error::Input("no measurements".into()))?
        .dim();
    let basis = BasisFamily::enumerate(n, degree.min(n))?;
    let a = build_sampling_matrix(points, &basis)?.normalized();
    let sol = lasso(&a, y, lambda, solver)?;
    let surrogate = top_s_nonconstant(&sol, sparsity, &basis)?;
    let min = minimize_over_support(&surrogate, limits)?;
    Ok(StageSolution {
        surrogate,
        assignment: min.assignment,
        surrogate_min: min.value,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Encoder from a restriction: fixed bits kept, all others `-1`.
pub fn alpha_from(restriction: &Restriction) -> BooleanPoint {
    let mut alpha = BooleanPoint::filled(restriction.n(), -1);
    for (&i, &v) in restriction.fixed() {
        alpha.set(i, v);
    }
    alpha
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasurementStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl MeasurementStats {
    fn of(y: &[f64]) -> Self {
        let count = y.len();
        let mean = y.iter().sum::<f64>() / count as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
        Self {
            count,
            mean,
            std: var.sqrt(),
            min: y.iter().copied().fold(f64::INFINITY, f64::min),
            max: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Every requested stage ran.
    Completed,
    /// The surrogate had no non-constant term left.
    ConstantSurrogate,
    /// Every bit was already fixed.
    NoFreeBits,
    /// Lasso hit its sweep limit; the stage was discarded.
    NotConverged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageReport {
    pub stage: usize,
    pub free_bits: usize,
    pub basis_size: usize,
    /// Surrogate in ambient bit indices.
    pub surrogate: SparsePolynomial,
    /// Bits fixed by this stage, ambient indices.
    pub assignment: Vec<(usize, i8)>,
    pub measurements: MeasurementStats,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct ConasOutcome {
    pub alpha: BooleanPoint,
    pub restriction: Restriction,
    pub stages: Vec<StageReport>,
    pub stop: StopReason,
    pub history: EvaluationHistory,
}

impl ConasOutcome {
    pub fn report(&self) -> String {
        let mut out = String::new();
        for s in &self.stages {
            let m = &s.measurements;
            let _ = writeln!(
                out,
                "stage {} free={} basis={} sweeps={} converged={}",
                s.stage, s.free_bits, s.basis_size, s.iterations, s.converged
            );
            let _ = writeln!(
                out,
                "  measurements m={} mean={:.6} std={:.6} min={:.6} max={:.6}",
                m.count, m.mean, m.std, m.min, m.max
            );
            let _ = writeln!(out, "  surrogate");
            for line in s.surrogate.to_text().lines() {
                let _ = writeln!(out, "    {line}");
            }
            let z: Vec<String> = s
                .assignment
                .iter()
                .map(|(i, v)| format!("{}={v:+}", i + 1))
                .collect();
            let _ = writeln!(out, "  z {}", z.join(" "));
        }
        let _ = writeln!(out, "stop {:?}", self.stop);
        let _ = writeln!(out, "alpha {}", self.alpha);
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConasOptions {
    pub seed: u64,
    pub workers: usize,
    pub limits: OracleLimits,
}

/// Multi-stage search over `{-1,+1}^n`. Each stage measures `m` encoders
/// drawn on the free bits, fits a surrogate over the free bits only and
/// fixes the surrogate's minimizer. Bits never fixed end up `-1`.
pub fn conas_search(
    n: usize,
    objective: &dyn Objective,
    cfg: &ConasConfig,
    opts: &ConasOptions,
) -> Result<ConasOutcome> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Argument("encoder length must be positive".into()));
    }
    let dispatcher = Dispatcher::new(opts.workers)?;
    let mut restriction = Restriction::none(n);
    let mut history = EvaluationHistory::new();
    let mut stages = Vec::new();
    let mut stop = StopReason::Completed;

    for stage in 1..=cfg.stages {
        let free = restriction.free_indices();
        if free.is_empty() {
            stop = StopReason::NoFreeBits;
            break;
        }
        let mut rng = stream(opts.seed, &[stage as u64]);
        let first = history.next_seq();
        let requests: Vec<EvalRequest> = (0..cfg.m)
            .map(|j| EvalRequest {
                seq: first + j as u64,
                point: restriction.sample(cfg.p, &mut rng),
                resource: 1.0,
            })
            .collect();
        let results = dispatcher.run(objective, &requests);
        let mut y = Vec::with_capacity(cfg.m);
        let mut local = Vec::with_capacity(cfg.m);
        for (req, res) in requests.into_iter().zip(results) {
            let loss = res.loss?;
            if !loss.is_finite() {
                return Err(Error::Evaluator(format!(
                    "loss for encoder {} is {loss}",
                    req.seq
                )));
            }
            local.push(restriction.project(&req.point)?);
            y.push(loss);
            history.append(EvaluationRecord {
                seq: req.seq,
                point: req.point,
                resource: 1.0,
                loss,
                wall_time: res.wall_time,
                evaluator: objective.id().to_string(),
            })?;
        }

        let sol = solve_measurements(
            &local,
            &y,
            cfg.sparsity,
            cfg.degree,
            cfg.lambda,
            &cfg.solver,
            &opts.limits,
        )?;
        let assignment: Vec<(usize, i8)> = sol.assignment.iter().map(|&(j, v)| (free[j], v)).collect();
        let basis_size = crate::fourier::basis_size(free.len(), cfg.degree.min(free.len())) as usize;
        let report = StageReport {
            stage,
            free_bits: free.len(),
            basis_size,
            surrogate: restriction.embed(&sol.surrogate)?,
            assignment: assignment.clone(),
            measurements: MeasurementStats::of(&y),
            iterations: sol.iterations,
            converged: sol.converged,
        };
        stages.push(report);
        if !sol.converged {
            log::warn!(
                "stage {stage}: lasso stopped after {} sweeps without converging; discarding the stage",
                sol.iterations
            );
            stop = StopReason::NotConverged;
            break;
        }
        if assignment.is_empty() {
            log::info!("stage {stage}: surrogate is constant, stopping");
            stop = StopReason::ConstantSurrogate;
            break;
        }
        for (i, v) in assignment {
            restriction.fix(i, v)?;
        }
    }

    Ok(ConasOutcome {
        alpha: alpha_from(&restriction),
        restriction,
        stages,
        stop,
        history,
    })
}
