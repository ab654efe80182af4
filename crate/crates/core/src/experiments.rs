//! Phase-transition and lambda-stability harnesses.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conas::{alpha_from, hamming, solve_measurements};
use crate::evaluators::{planted_polynomial, Dispatcher, EvalRequest, Objective, PlantedSpec};
use crate::fourier::{
    basis_size, minimize_over_support, restrict, BasisFamily, BooleanPoint, MonomialIndex, OracleLimits,
    Restriction, SparsePolynomial,
};
use crate::recovery::{build_sampling_matrix, lasso, top_s, SolverOptions};
use crate::rng::stream;
use crate::{Error, Result};

/// Largest basis the phase harness will build.
pub const MAX_COLUMNS: u128 = 1_000_000;

/// One-sided 95% normal quantile.
const Z95: f64 = 1.6448536269514722;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuccessCriterion {
    /// The kept support equals the planted support.
    #[default]
    SupportExact,
    /// Fixing the surrogate's minimizer still leaves the planted minimum
    /// reachable.
    ArgminMatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseConfig {
    pub n: usize,
    pub degree: usize,
    /// Planted sparsity `s*`; also the number of terms kept.
    pub sparsity: usize,
    pub sigma: f64,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub criterion: SuccessCriterion,
    /// `delta` of the reference bound.
    pub delta: f64,
    pub lambda: f64,
    /// Planted coefficient magnitudes.
    pub min_abs: f64,
    pub max_abs: f64,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            n: 20,
            degree: 2,
            sparsity: 5,
            sigma: 0.0,
            m_grid: (1..=12).map(|k| 50 * k).collect(),
            trials: 50,
            criterion: SuccessCriterion::SupportExact,
            delta: 0.5,
            lambda: 0.1,
            min_abs: 0.5,
            max_abs: 1.5,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

impl PhaseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_grid.is_empty() {
            return Err(Error::Argument("phase.m_grid is empty".into()));
        }
        if self.m_grid[0] == 0 || self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument(
                "phase.m_grid must be positive and strictly increasing".into(),
            ));
        }
        if self.trials < 1 {
            return Err(Error::Argument("phase.trials must be at least 1".into()));
        }
        if self.sparsity < 1 {
            return Err(Error::Argument("phase.sparsity must be at least 1".into()));
        }
        if self.degree < 1 || self.degree > self.n {
            return Err(Error::Argument(format!(
                "phase.degree must lie in 1..={}, got {}",
                self.n, self.degree
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Argument(format!(
                "phase.delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Argument(
                "phase.sigma must be finite and non-negative".into(),
            ));
        }
        let cols = basis_size(self.n, self.degree);
        if cols > MAX_COLUMNS {
            return Err(Error::Refused(format!(
                "basis for n = {}, d = {} has {cols} columns, limit is {MAX_COLUMNS}",
                self.n, self.degree
            )));
        }
        Ok(())
    }

    fn planted_spec(&self) -> PlantedSpec {
        PlantedSpec {
            n: self.n,
            degree: self.degree,
            sparsity: self.sparsity,
            min_abs: self.min_abs,
            max_abs: self.max_abs,
            disjoint: false,
            constant: 0.0,
        }
    }
}

/// `log^2(1/delta) delta^-2 s log^2(s/delta) d log(n)` with unit constant
/// and natural logarithms. Only its shape is meaningful.
pub fn reference_bound(n: usize, d: usize, s: usize, delta: f64) -> f64 {
    let l = (1.0 / delta).ln();
    let ls = (s as f64 / delta).ln();
    l * l / (delta * delta) * s as f64 * ls * ls * d as f64 * (n as f64).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean size of the symmetric difference between kept and planted
    /// supports.
    pub mean_support_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseTable {
    pub rows: Vec<PhaseRow>,
    pub basis_size: usize,
    pub reference_bound: f64,
    pub config: PhaseConfig,
}

impl PhaseTable {
    /// Comma-separated table with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,trials,successes,success_rate,mean_support_error,reference_bound\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.m, r.trials, r.successes, r.success_rate, r.mean_support_error, self.reference_bound
            );
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    pub support_error: usize,
}

fn support(p: &SparsePolynomial) -> BTreeSet<MonomialIndex> {
    p.terms()
        .filter(|(_, c)| *c != 0.0)
        .map(|(s, _)| s.clone())
        .collect()
}

/// One planted instance measured `m` times and recovered with lasso + top-s.
pub fn phase_trial(cfg: &PhaseConfig, basis: &BasisFamily, m: usize, trial: usize) -> Result<TrialOutcome> {
    let mut rng = stream(cfg.seed, &[m as u64, trial as u64]);
    let truth = planted_polynomial(&cfg.planted_spec(), &mut rng)?;
    let points: Vec<BooleanPoint> = (0..m).map(|_| BooleanPoint::uniform(cfg.n, &mut rng)).collect();
    let mut y = Vec::with_capacity(m);
    for p in &points {
        let noise: f64 = StandardNormal.sample(&mut rng);
        y.push(truth.eval(p)? + cfg.sigma * noise);
    }
    let a = build_sampling_matrix(&points, basis)?.normalized();
    let sol = lasso(&a, &y, cfg.lambda, &cfg.solver)?;
    let g = top_s(&sol, cfg.sparsity, basis)?;
    let kept = support(&g);
    let planted = support(&truth);
    let support_error = kept.symmetric_difference(&planted).count();
    let success = match cfg.criterion {
        SuccessCriterion::SupportExact => support_error == 0,
        SuccessCriterion::ArgminMatch => argmin_match(&truth, &g)?,
    };
    Ok(TrialOutcome {
        success,
        support_error,
    })
}

fn argmin_match(truth: &SparsePolynomial, g: &SparsePolynomial) -> Result<bool> {
    let limits = OracleLimits::default();
    let best = minimize_over_support(truth, &limits)?.value;
    let z = minimize_over_support(g, &limits)?.as_restriction(truth.n())?;
    let reachable = minimize_over_support(&restrict(truth, &z)?, &limits)?.value;
    Ok(reachable <= best + 1e-9 * best.abs().max(1.0))
}

fn pool(workers: usize) -> Result<Option<rayon::ThreadPool>> {
    if workers <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map(Some)
        .map_err(|e| Error::Argument(format!("worker pool: {e}")))
}

/// Success rate per `m`. Trials run in parallel; each uses its own stream
/// derived from `(seed, m, trial)`, so the table does not depend on the
/// worker count.
pub fn phase_transition(cfg: &PhaseConfig, workers: usize) -> Result<PhaseTable> {
    cfg.validate()?;
    let basis = BasisFamily::enumerate(cfg.n, cfg.degree)?;
    let pool = pool(workers)?;
    let mut rows = Vec::with_capacity(cfg.m_grid.len());
    for &m in &cfg.m_grid {
        let run = || -> Result<Vec<TrialOutcome>> {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| phase_trial(cfg, &basis, m, t))
                .collect()
        };
        let outcomes = match &pool {
            Some(p) => p.install(run)?,
            None => (0..cfg.trials)
                .map(|t| phase_trial(cfg, &basis, m, t))
                .collect::<Result<Vec<_>>>()?,
        };
        let successes = outcomes.iter().filter(|o| o.success).count();
        let err: usize = outcomes.iter().map(|o| o.support_error).sum();
        rows.push(PhaseRow {
            m,
            trials: cfg.trials,
            successes,
            success_rate: successes as f64 / cfg.trials as f64,
            mean_support_error: err as f64 / cfg.trials as f64,
        });
        log::info!("m = {m}: {successes}/{} successes", cfg.trials);
    }
    Ok(PhaseTable {
        rows,
        basis_size: basis.len(),
        reference_bound: reference_bound(cfg.n, cfg.degree, cfg.sparsity, cfg.delta),
        config: cfg.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendTest {
    /// Cochran-Armitage statistic with `m` as score; `NaN` when every
    /// trial had the same outcome.
    pub z: f64,
    /// Adjacent pairs `(m_i, m_{i+1})` whose drop is significant at 95%.
    pub significant_drops: Vec<(usize, usize)>,
    /// No significant drop and either a significant upward trend or a flat
    /// table.
    pub non_decreasing: bool,
}

/// Tests that success rates do not fall as `m` grows.
pub fn trend_test(rows: &[PhaseRow]) -> TrendTest {
    let total: f64 = rows.iter().map(|r| r.trials as f64).sum();
    let hits: f64 = rows.iter().map(|r| r.successes as f64).sum();
    let mean_m = rows.iter().map(|r| r.trials as f64 * r.m as f64).sum::<f64>() / total;
    let p = hits / total;
    let t: f64 = rows
        .iter()
        .map(|r| r.successes as f64 * (r.m as f64 - mean_m))
        .sum();
    let spread: f64 = rows
        .iter()
        .map(|r| r.trials as f64 * (r.m as f64 - mean_m).powi(2))
        .sum();
    let var = p * (1.0 - p) * spread;
    let z = if var > 0.0 { t / var.sqrt() } else { f64::NAN };

    let mut significant_drops = Vec::new();
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.success_rate >= a.success_rate {
            continue;
        }
        let pooled = (a.successes + b.successes) as f64 / (a.trials + b.trials) as f64;
        let se = (pooled * (1.0 - pooled) * (1.0 / a.trials as f64 + 1.0 / b.trials as f64)).sqrt();
        if se > 0.0 && (a.success_rate - b.success_rate) / se > Z95 {
            significant_drops.push((a.m, b.m));
        }
    }
    let non_decreasing = significant_drops.is_empty() && (z.is_nan() || z > Z95);
    TrendTest {
        z,
        significant_drops,
        non_decreasing,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaConfig {
    pub m: usize,
    pub p: f64,
    pub sparsity: usize,
    pub degree: usize,
    /// The first entry is the reference.
    pub lambdas: Vec<f64>,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        Self {
            m: 1000,
            p: 0.5,
            sparsity: 10,
            degree: 2,
            lambdas: vec![1.0, 0.5, 2.0],
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaRow {
    pub lambda: f64,
    /// Distance of this solution's encoder to the reference encoder.
    pub hamming: usize,
    /// Non-constant terms in the kept surrogate.
    pub support_size: usize,
    pub converged: bool,
    pub alpha: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaTable {
    pub rows: Vec<LambdaRow>,
    pub config: LambdaConfig,
}

impl LambdaTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,hamming,support_size,converged,alpha\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.lambda, r.hamming, r.support_size, r.converged, r.alpha
            );
        }
        out
    }
}

/// Draws one measurement set and re-solves it for every lambda.
pub fn lambda_stability(
    n: usize,
    objective: &dyn Objective,
    cfg: &LambdaConfig,
    workers: usize,
) -> Result<LambdaTable> {
    if cfg.lambdas.is_empty() {
        return Err(Error::Argument("lambda list is empty".into()));
    }
    if cfg.m < 1 {
        return Err(Error::Argument("lambda.m must be at least 1".into()));
    }
    let mut rng = stream(cfg.seed, &[0]);
    let free = Restriction::none(n);
    let mut requests = Vec::with_capacity(cfg.m);
    for j in 0..cfg.m {
        requests.push(EvalRequest {
            seq: j as u64,
            point: crate::conas::sample_encoder(&free, cfg.p, &mut rng)?,
            resource: 1.0,
        });
    }
    let results = Dispatcher::new(workers)?.run(objective, &requests);
    let mut y = Vec::with_capacity(cfg.m);
    for r in results {
        y.push(r.loss?);
    }
    let points: Vec<BooleanPoint> = requests.into_iter().map(|r| r.point).collect();
    frozen_lambda_stability(&points, &y, cfg)
}

/// Lambda sweep on a given measurement set.
pub fn frozen_lambda_stability(
    points: &[BooleanPoint],
    y: &[f64],
    cfg: &LambdaConfig,
) -> Result<LambdaTable> {
    if cfg.lambdas.is_empty() {
        return Err(Error::Argument("lambda list is empty".into()));
    }
    let limits = OracleLimits::default();
    let mut rows: Vec<LambdaRow> = Vec::with_capacity(cfg.lambdas.len());
    let mut reference: Option<BooleanPoint> = None;
    for &lambda in &cfg.lambdas {
        let sol = solve_measurements(points, y, cfg.sparsity, cfg.degree, lambda, &cfg.solver, &limits)?;
        let n = points[0].dim();
        let alpha = alpha_from(&Restriction::with_fixed(n, sol.assignment.iter().copied())?);
        let reference = reference.get_or_insert_with(|| alpha.clone());
        rows.push(LambdaRow {
            lambda,
            hamming: hamming(reference, &alpha)?,
            support_size: sol.surrogate.terms().filter(|(s, _)| !s.is_empty()).count(),
            converged: sol.converged,
            alpha: alpha.to_string(),
        });
    }
    Ok(LambdaTable {
        rows,
        config: cfg.clone(),
    })
}
