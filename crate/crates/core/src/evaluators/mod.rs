//! Objective backends and evaluation bookkeeping.

mod external;
mod history;
mod planted;

pub use external::{ExternalEvaluator, ExternalOptions};
pub use history::{EvaluationHistory, EvaluationRecord, ResourceKey};
pub use planted::{planted_polynomial, PlantedObjective, PlantedSpec};

use std::time::Instant;

use rayon::prelude::*;

use crate::fourier::BooleanPoint;
use crate::{Error, Result};

/// One evaluation request. `seq` is unique within a run and doubles as the
/// wire-protocol id.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRequest {
    pub seq: u64,
    pub point: BooleanPoint,
    pub resource: f64,
}

/// An expensive black-box loss.
pub trait Objective: Sync {
    /// Short identifier stored with every history record.
    fn id(&self) -> &str;

    fn evaluate(&self, request: &EvalRequest) -> Result<f64>;
}

/// Wraps a closure `f(point, resource)` as an [`Objective`].
pub struct FnObjective<F> {
    id: String,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&BooleanPoint, f64) -> f64 + Sync,
{
    pub fn new(id: impl Into<String>, f: F) -> Self {
        Self { id: id.into(), f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&BooleanPoint, f64) -> f64 + Sync,
{
    fn id(&self) -> &str {
        &self.id
    }

    fn evaluate(&self, request: &EvalRequest) -> Result<f64> {
        Ok((self.f)(&request.point, request.resource))
    }
}

/// Outcome of one dispatched request.
#[derive(Debug)]
pub struct Evaluated {
    pub loss: Result<f64>,
    pub wall_time: f64,
}

/// Runs batches of requests, optionally on a private worker pool. Results
/// always come back in request order.
pub struct Dispatcher {
    pool: Option<rayon::ThreadPool>,
}

impl Dispatcher {
    /// `workers <= 1` evaluates serially on the calling thread.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::Argument(format!("worker pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { pool })
    }

    pub fn serial() -> Self {
        Self { pool: None }
    }

    pub fn run(&self, objective: &dyn Objective, requests: &[EvalRequest]) -> Vec<Evaluated> {
        let one = |req: &EvalRequest| {
            let start = Instant::now();
            let loss = objective.evaluate(req).and_then(|v| {
                if v.is_nan() {
                    Err(Error::Evaluator(format!("loss for request {} is NaN", req.seq)))
                } else {
                    Ok(v)
                }
            });
            Evaluated {
                loss,
                wall_time: start.elapsed().as_secs_f64(),
            }
        };
        match &self.pool {
            Some(pool) => pool.install(|| requests.par_iter().map(one).collect()),
            None => requests.iter().map(one).collect(),
        }
    }
}
