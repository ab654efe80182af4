use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{group_columns, HyperparamSpace};
use crate::evaluators::{EvaluationHistory, ResourceKey};
use crate::fourier::{
    minimize_over_support, BasisFamily, BooleanPoint, OracleLimits, Restriction, SparsePolynomial,
};
use crate::recovery::{build_sampling_matrix, group_lasso, top_s_nonconstant, SolverOptions};
use crate::{Error, Result};

/// Parameters of the sparse-recovery sampler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PgsrConfig {
    /// `s`: non-constant terms kept in the surrogate.
    pub sparsity: usize,
    /// `d`: polynomial degree of the basis.
    pub degree: usize,
    /// `T`: finite observations a level needs before recovery kicks in.
    /// `usize::MAX` disables recovery entirely.
    pub min_observations: usize,
    /// `rho`: probability that a sample ignores the restriction.
    pub rho: f64,
    pub lambda: f64,
    pub solver: SolverOptions,
}

impl Default for PgsrConfig {
    fn default() -> Self {
        Self {
            sparsity: 5,
            degree: 2,
            min_observations: 100,
            rho: 0.1,
            lambda: 0.01,
            solver: SolverOptions::default(),
        }
    }
}

impl PgsrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sparsity < 1 {
            return Err(Error::Argument("pgsr.sparsity must be at least 1".into()));
        }
        if self.min_observations < 1 {
            return Err(Error::Argument("pgsr.min_observations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Argument(format!(
                "pgsr.rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Argument(format!(
                "pgsr.lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// What the sampler learned from one history level.
#[derive(Clone, Debug, PartialEq)]
pub struct PgsrRecovery {
    pub resource: f64,
    pub observations: usize,
    pub surrogate: SparsePolynomial,
    pub restriction: Restriction,
}

#[derive(Clone, Debug)]
pub struct PgsrDraw {
    pub points: Vec<BooleanPoint>,
    /// `None` when the draw fell back to the full domain.
    pub recovery: Option<PgsrRecovery>,
}

fn uniform_batch<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<BooleanPoint> {
    (0..count).map(|_| BooleanPoint::uniform(n, rng)).collect()
}

/// Fits a sparse surrogate to the richest history level and samples
/// `count` points from the subcube around its minimizer.
pub fn pgsr_sampling<R: Rng + ?Sized>(
    history: &EvaluationHistory,
    pgsr: &PgsrConfig,
    space: &HyperparamSpace,
    count: usize,
    limits: &OracleLimits,
    rng: &mut R,
) -> Result<PgsrDraw> {
    if count == 0 {
        return Err(Error::Argument("sample count must be at least 1".into()));
    }
    pgsr.validate()?;
    let n = space.n();
    let level = history
        .level_keys()
        .rev()
        .find(|&key| history.level(key).filter(|r| r.loss.is_finite()).count() >= pgsr.min_observations);
    let Some(key) = level else {
        return Ok(PgsrDraw {
            points: uniform_batch(n, count, rng),
            recovery: None,
        });
    };

    let recovery = match recover(history, key, pgsr, space, limits)? {
        Some(r) => r,
        None => {
            return Ok(PgsrDraw {
                points: uniform_batch(n, count, rng),
                recovery: None,
            })
        }
    };
    let points = (0..count)
        .map(|_| {
            if rng.random_bool(pgsr.rho) {
                BooleanPoint::uniform(n, rng)
            } else {
                recovery.restriction.sample(0.5, rng)
            }
        })
        .collect();
    Ok(PgsrDraw {
        points,
        recovery: Some(recovery),
    })
}

fn recover(
    history: &EvaluationHistory,
    key: ResourceKey,
    pgsr: &PgsrConfig,
    space: &HyperparamSpace,
    limits: &OracleLimits,
) -> Result<Option<PgsrRecovery>> {
    let n = space.n();
    let (points, y): (Vec<BooleanPoint>, Vec<f64>) = history
        .level(key)
        .filter(|r| r.loss.is_finite())
        .map(|r| (r.point.clone(), r.loss))
        .unzip();
    let basis = BasisFamily::enumerate(n, pgsr.degree.min(n))?;
    let groups = group_columns(space, &basis)?;
    let a = build_sampling_matrix(&points, &basis)?.normalized();
    let sol = group_lasso(&a, &groups, &y, pgsr.lambda, &pgsr.solver)?;
    if !sol.converged {
        log::warn!(
            "group lasso did not converge after {} sweeps at resource {}; sampling uniformly",
            sol.iterations,
            key.resource()
        );
        return Ok(None);
    }
    let surrogate = top_s_nonconstant(&sol, pgsr.sparsity, &basis)?;
    let restriction = minimize_over_support(&surrogate, limits)?.as_restriction(n)?;
    log::debug!(
        "recovered {} terms from {} observations at resource {}; fixed {} bits",
        surrogate.len(),
        points.len(),
        key.resource(),
        restriction.num_fixed()
    );
    Ok(Some(PgsrRecovery {
        resource: key.resource(),
        observations: points.len(),
        surrogate,
        restriction,
    }))
}
