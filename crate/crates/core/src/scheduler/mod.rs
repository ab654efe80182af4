//! Successive Halving, Hyperband and the recovery-guided PGSR-HB loop.

mod pgsr;
mod plan;

pub use pgsr::{pgsr_sampling, PgsrConfig, PgsrDraw, PgsrRecovery};
pub use plan::{BracketPlan, RoundPlan, SchedulerConfig};

use std::fmt::Write as _;

use serde::Serialize;

use crate::encoding::HyperparamSpace;
use crate::evaluators::{
    Dispatcher, EvalRequest, EvaluationHistory, EvaluationRecord, Objective, ResourceKey,
};
use crate::fourier::{BooleanPoint, OracleLimits};
use crate::rng::stream;
use crate::{Error, Result};

/// The `k` entries with the smallest loss, best first. Ties keep insertion
/// order.
pub fn top_k<T: Clone>(configs: &[T], losses: &[f64], k: usize) -> Result<Vec<T>> {
    if configs.len() != losses.len() {
        return Err(Error::Dimension {
            expected: configs.len(),
            found: losses.len(),
        });
    }
    if k > configs.len() {
        return Err(Error::Argument(format!(
            "cannot keep {k} of {} configurations",
            configs.len()
        )));
    }
    let mut order: Vec<usize> = (0..configs.len()).collect();
    order.sort_by(|&i, &j| losses[i].total_cmp(&losses[j]).then(i.cmp(&j)));
    Ok(order[..k].iter().map(|&i| configs[i].clone()).collect())
}

/// Execution settings shared by every search entry point.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Evaluation workers per round; `<= 1` runs serially.
    pub workers: usize,
    /// Cycle to start from when resuming.
    pub start_cycle: usize,
    /// Earlier evaluations; new records are appended after them.
    pub history: EvaluationHistory,
    pub limits: OracleLimits,
}

impl RunOptions {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundReport {
    pub i: usize,
    pub n_i: usize,
    pub r_i: f64,
    /// `+inf` when every evaluation of the round failed.
    pub best_loss: f64,
    pub failures: usize,
}

/// Restriction summary for brackets sampled by recovery.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub resource: f64,
    pub observations: usize,
    pub surrogate: String,
    /// `(bit, value)` pairs fixed by the restriction.
    pub fixed: Vec<(usize, i8)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BracketReport {
    pub cycle: usize,
    pub s: usize,
    pub n: usize,
    pub r: f64,
    pub rounds: Vec<RoundReport>,
    pub recovery: Option<RecoveryReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Incumbent {
    pub seq: u64,
    pub point: BooleanPoint,
    pub resource: f64,
    pub loss: f64,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    /// `None` when no finite loss was observed where the incumbent is taken.
    pub best: Option<Incumbent>,
    pub brackets: Vec<BracketReport>,
    pub history: EvaluationHistory,
    pub failures: usize,
}

impl SearchOutcome {
    /// Human-readable run summary with one table per bracket.
    pub fn report(&self, space: Option<&HyperparamSpace>) -> String {
        let mut out = String::new();
        for b in &self.brackets {
            let _ = writeln!(out, "bracket cycle={} s={} n={} r={}", b.cycle, b.s, b.n, b.r);
            if let Some(rec) = &b.recovery {
                let _ = writeln!(
                    out,
                    "  recovery at r={} from {} observations, fixed {:?}",
                    rec.resource, rec.observations, rec.fixed
                );
            }
            let _ = writeln!(out, "  {:>3} {:>6} {:>12} {:>14}", "i", "n_i", "r_i", "best_loss");
            for r in &b.rounds {
                let _ = writeln!(
                    out,
                    "  {:>3} {:>6} {:>12} {:>14.6}",
                    r.i, r.n_i, r.r_i, r.best_loss
                );
            }
        }
        let _ = writeln!(
            out,
            "evaluations {} failures {}",
            self.history.len(),
            self.failures
        );
        match &self.best {
            Some(best) => {
                let _ = writeln!(
                    out,
                    "best loss {} at r={} (seq {})",
                    best.loss, best.resource, best.seq
                );
                let _ = writeln!(out, "best bits {}", best.point);
                if let Some(space) = space {
                    if let Ok(values) = space.decode(&best.point) {
                        for (cat, v) in space.categories().iter().zip(values) {
                            let _ = writeln!(out, "  {} = {}", cat.name(), v);
                        }
                    }
                }
            }
            None => {
                let _ = writeln!(out, "no finite loss observed");
            }
        }
        out
    }
}

/// Points paired with their losses.
type Scored = Vec<(BooleanPoint, f64)>;

enum Sampler<'a> {
    Uniform {
        n: usize,
    },
    Pgsr {
        cfg: &'a PgsrConfig,
        space: &'a HyperparamSpace,
    },
}

struct Engine<'a> {
    objective: &'a dyn Objective,
    dispatcher: Dispatcher,
    history: EvaluationHistory,
    failures: usize,
}

impl<'a> Engine<'a> {
    fn new(objective: &'a dyn Objective, opts: &RunOptions) -> Result<Self> {
        Ok(Self {
            objective,
            dispatcher: Dispatcher::new(opts.workers)?,
            history: opts.history.clone(),
            failures: 0,
        })
    }

    /// Evaluates one round and appends it to the history. Protocol errors
    /// abort the run, other evaluator failures become `+inf`.
    fn evaluate(&mut self, points: &[BooleanPoint], resource: f64) -> Result<Vec<f64>> {
        let first = self.history.next_seq();
        let requests: Vec<EvalRequest> = points
            .iter()
            .enumerate()
            .map(|(j, p)| EvalRequest {
                seq: first + j as u64,
                point: p.clone(),
                resource,
            })
            .collect();
        let results = self.dispatcher.run(self.objective, &requests);
        let mut losses = Vec::with_capacity(points.len());
        for (req, res) in requests.into_iter().zip(results) {
            let loss = match res.loss {
                Ok(v) => v,
                Err(e @ Error::Protocol { .. }) => return Err(e),
                Err(e) => {
                    log::warn!("evaluation {} failed: {e}", req.seq);
                    self.failures += 1;
                    f64::INFINITY
                }
            };
            self.history.append(EvaluationRecord {
                seq: req.seq,
                point: req.point,
                resource,
                loss,
                wall_time: res.wall_time,
                evaluator: self.objective.id().to_string(),
            })?;
            losses.push(loss);
        }
        Ok(losses)
    }

    /// Runs the halving rounds of one bracket. Returns the round reports
    /// and the points and losses of the last evaluated round.
    fn bracket(
        &mut self,
        plan: &BracketPlan,
        eta: u64,
        mut configs: Vec<BooleanPoint>,
    ) -> Result<(Vec<RoundReport>, Scored)> {
        let mut reports = Vec::with_capacity(plan.rounds.len());
        let mut last = Vec::new();
        for round in &plan.rounds {
            if configs.is_empty() {
                break;
            }
            let failures_before = self.failures;
            let losses = self.evaluate(&configs, round.r_i)?;
            reports.push(RoundReport {
                i: round.i,
                n_i: configs.len(),
                r_i: round.r_i,
                best_loss: losses.iter().copied().fold(f64::INFINITY, f64::min),
                failures: self.failures - failures_before,
            });
            let keep = configs.len() / eta as usize;
            let survivors = top_k(&configs, &losses, keep)?;
            last = configs.into_iter().zip(losses).collect();
            configs = survivors;
        }
        Ok((reports, last))
    }
}

fn check_options(cfg: &SchedulerConfig, opts: &RunOptions) -> Result<()> {
    cfg.validate()?;
    if opts.start_cycle >= cfg.cycles {
        return Err(Error::Argument(format!(
            "start cycle {} is past the last cycle {}",
            opts.start_cycle,
            cfg.cycles - 1
        )));
    }
    Ok(())
}

fn best_at(history: &EvaluationHistory, resource: f64) -> Option<Incumbent> {
    let mut best: Option<&EvaluationRecord> = None;
    for r in history.level(ResourceKey::of(resource)) {
        if r.loss.is_finite() && best.is_none_or(|b| r.loss < b.loss) {
            best = Some(r);
        }
    }
    best.map(|r| Incumbent {
        seq: r.seq,
        point: r.point.clone(),
        resource: r.resource,
        loss: r.loss,
    })
}

/// One bracket of Successive Halving: `R` uniform configurations, starting
/// at one resource unit. The incumbent is the best configuration of the
/// final round.
pub fn successive_halving(
    cfg: &SchedulerConfig,
    n: usize,
    objective: &dyn Objective,
    opts: &RunOptions,
) -> Result<SearchOutcome> {
    check_options(cfg, opts)?;
    let plan = cfg.successive_halving_plan();
    let mut engine = Engine::new(objective, opts)?;
    let mut rng = stream(opts.seed, &[0, plan.s as u64]);
    let configs = (0..plan.n).map(|_| BooleanPoint::uniform(n, &mut rng)).collect();
    let (rounds, last) = engine.bracket(&plan, cfg.eta, configs)?;
    let final_resource = rounds.last().map_or(plan.r, |r| r.r_i);
    let first_final = engine.history.next_seq() - last.len() as u64;
    let mut best: Option<Incumbent> = None;
    for (j, (point, loss)) in last.into_iter().enumerate() {
        if loss.is_finite() && best.as_ref().is_none_or(|b| loss < b.loss) {
            best = Some(Incumbent {
                seq: first_final + j as u64,
                point,
                resource: final_resource,
                loss,
            });
        }
    }
    Ok(SearchOutcome {
        best,
        brackets: vec![BracketReport {
            cycle: 0,
            s: plan.s,
            n: plan.n,
            r: plan.r,
            rounds,
            recovery: None,
        }],
        history: engine.history,
        failures: engine.failures,
    })
}

/// Plain Hyperband over `{-1,+1}^n` with uniform sampling, repeated for
/// every cycle.
pub fn hyperband(
    cfg: &SchedulerConfig,
    n: usize,
    objective: &dyn Objective,
    opts: &RunOptions,
) -> Result<SearchOutcome> {
    run_cycles(cfg, Sampler::Uniform { n }, objective, opts)
}

/// Hyperband whose bracket sampler fits a sparse surrogate to the history
/// once some level holds `T` observations.
pub fn pgsr_hb(
    cfg: &SchedulerConfig,
    pgsr: &PgsrConfig,
    space: &HyperparamSpace,
    objective: &dyn Objective,
    opts: &RunOptions,
) -> Result<SearchOutcome> {
    pgsr.validate()?;
    run_cycles(cfg, Sampler::Pgsr { cfg: pgsr, space }, objective, opts)
}

fn run_cycles(
    cfg: &SchedulerConfig,
    sampler: Sampler<'_>,
    objective: &dyn Objective,
    opts: &RunOptions,
) -> Result<SearchOutcome> {
    check_options(cfg, opts)?;
    let mut engine = Engine::new(objective, opts)?;
    let mut brackets = Vec::new();
    for cycle in opts.start_cycle..cfg.cycles {
        for plan in cfg.brackets() {
            let mut rng = stream(opts.seed, &[cycle as u64, plan.s as u64]);
            let (configs, recovery) = match &sampler {
                Sampler::Uniform { n } => (
                    (0..plan.n).map(|_| BooleanPoint::uniform(*n, &mut rng)).collect(),
                    None,
                ),
                Sampler::Pgsr { cfg: p, space } => {
                    let draw = pgsr_sampling(&engine.history, p, space, plan.n, &opts.limits, &mut rng)?;
                    let recovery = draw.recovery.map(|r| RecoveryReport {
                        resource: r.resource,
                        observations: r.observations,
                        surrogate: r.surrogate.to_text(),
                        fixed: r.restriction.fixed().iter().map(|(&i, &v)| (i, v)).collect(),
                    });
                    (draw.points, recovery)
                }
            };
            let (rounds, _) = engine.bracket(&plan, cfg.eta, configs)?;
            brackets.push(BracketReport {
                cycle,
                s: plan.s,
                n: plan.n,
                r: plan.r,
                rounds,
                recovery,
            });
        }
    }
    Ok(SearchOutcome {
        best: best_at(&engine.history, cfg.max_resource as f64),
        brackets,
        history: engine.history,
        failures: engine.failures,
    })
}
