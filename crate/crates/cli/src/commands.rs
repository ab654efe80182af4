use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;
use spectral_search::conas::{conas_search, decode_cells, repair_cell, ConasOptions};
use spectral_search::experiments::{lambda_stability, phase_transition, trend_test};
use spectral_search::recovery::{
    format_vector, group_kkt_violation, group_lasso, lasso, lasso_kkt_violation, parse_vector,
    GroupStructure, MeasurementMatrix,
};
use spectral_search::scheduler::{hyperband, pgsr_hb, RunOptions};

use crate::config::{self, require, Loaded, RecoverMethod};
use crate::error::{CliError, CliResult};
use crate::output::{check_free, OutputDir, Provenance};
use crate::{CommonArgs, Mode};

#[derive(Serialize)]
struct Best {
    seq: u64,
    bits: String,
    resource: f64,
    loss: f64,
    values: BTreeMap<String, f64>,
}

pub fn hpo(args: &CommonArgs, mode: Option<Mode>) -> CliResult<()> {
    let mut cfg = Loaded::read(args)?;
    check_free(&cfg.out)?;
    let seed = cfg.resolve_seed(0);
    let mode = mode.or(cfg.file.run.mode).unwrap_or(Mode::Pgsr);
    cfg.file.run.mode = Some(mode);

    let space = config::hyperparam_space(require(cfg.file.space.as_ref(), "space")?)?;
    let sched = *require(cfg.file.scheduler.as_ref(), "scheduler")?;
    sched.validate()?;
    let pgsr = cfg.file.pgsr.unwrap_or_default();
    pgsr.validate()?;
    let objective = config::objective(
        cfg.file.evaluator.as_ref(),
        space.n(),
        seed,
        sched.max_resource as f64,
    )?;
    let provenance = Provenance::new("hpo", &cfg.canonical(), &[], seed)?;

    let opts = RunOptions {
        seed,
        workers: cfg.workers,
        ..RunOptions::default()
    };
    let outcome = match mode {
        Mode::Pgsr => pgsr_hb(&sched, &pgsr, &space, objective.as_ref(), &opts)?,
        Mode::Hyperband => hyperband(&sched, space.n(), objective.as_ref(), &opts)?,
    };
    drop(objective);

    let report = outcome.report(Some(&space));
    let best = match &outcome.best {
        Some(b) => {
            let values = space.decode(&b.point)?;
            Some(Best {
                seq: b.seq,
                bits: b.point.to_string(),
                resource: b.resource,
                loss: b.loss,
                values: space
                    .categories()
                    .iter()
                    .map(|c| c.name().to_string())
                    .zip(values)
                    .collect(),
            })
        }
        None => None,
    };
    let out = OutputDir::create(&cfg.out, provenance)?;
    out.text("report.txt", &report)?;
    out.history("history.jsonl", &outcome.history)?;
    out.json(
        "result.json",
        &json!({
            "mode": mode,
            "best": best,
            "evaluations": outcome.history.len(),
            "failures": outcome.failures,
            "brackets": outcome.brackets,
        }),
    )?;
    let dest = out.commit()?;
    print!("{report}");
    println!("results in {}", dest.display());
    Ok(())
}

pub fn nas(args: &CommonArgs) -> CliResult<()> {
    let mut cfg = Loaded::read(args)?;
    check_free(&cfg.out)?;
    let seed = cfg.resolve_seed(0);
    let space = config::architecture(cfg.file.architecture.as_ref())?;
    let conas = cfg.file.conas.unwrap_or_default();
    conas.validate()?;
    let objective = config::objective(cfg.file.evaluator.as_ref(), space.n(), seed, 1.0)?;
    let provenance = Provenance::new("nas", &cfg.canonical(), &[], seed)?;

    let opts = ConasOptions {
        seed,
        workers: cfg.workers,
        ..ConasOptions::default()
    };
    let outcome = conas_search(space.n(), objective.as_ref(), &conas, &opts)?;
    drop(objective);

    let mut report = outcome.report();
    let mut cells_text = String::new();
    for cell in decode_cells(&space, &outcome.alpha)? {
        let fixed = repair_cell(&cell);
        let added: Vec<String> = fixed.edges[cell.edges.len()..]
            .iter()
            .map(|e| e.succ.to_string())
            .collect();
        if !added.is_empty() {
            report.push_str(&format!(
                "cell {}: identity edge from input 0 added for nodes {}\n",
                cell.name,
                added.join(",")
            ));
        }
        if !cells_text.is_empty() {
            cells_text.push('\n');
        }
        cells_text.push_str(&fixed.to_string());
    }

    let stages: Vec<_> = outcome
        .stages
        .iter()
        .map(|s| {
            json!({
                "stage": s.stage,
                "free_bits": s.free_bits,
                "basis_size": s.basis_size,
                "sweeps": s.iterations,
                "converged": s.converged,
                "measurements": s.measurements,
                "surrogate": s.surrogate.to_text(),
                "fixed": s.assignment,
            })
        })
        .collect();
    let out = OutputDir::create(&cfg.out, provenance)?;
    out.text("report.txt", &report)?;
    out.text("cells.txt", &cells_text)?;
    out.history("history.jsonl", &outcome.history)?;
    out.json(
        "result.json",
        &json!({
            "n": space.n(),
            "alpha": outcome.alpha.to_string(),
            "stop": outcome.stop,
            "stages": stages,
        }),
    )?;
    let dest = out.commit()?;
    print!("{report}{cells_text}");
    println!("results in {}", dest.display());
    Ok(())
}

pub fn phase(args: &CommonArgs) -> CliResult<()> {
    let mut cfg = Loaded::read(args)?;
    check_free(&cfg.out)?;
    let mut phase = cfg.file.phase.clone().unwrap_or_default();
    phase.seed = cfg.resolve_seed(phase.seed);
    phase.validate()?;
    cfg.file.phase = Some(phase.clone());
    let provenance = Provenance::new("phase", &cfg.canonical(), &[], phase.seed)?;

    let table = phase_transition(&phase, cfg.workers)?;
    let trend = trend_test(&table.rows);
    let csv = table.to_csv();
    let out = OutputDir::create(&cfg.out, provenance)?;
    out.text("phase.csv", &csv)?;
    out.json(
        "summary.json",
        &json!({
            "basis_size": table.basis_size,
            "reference_bound": table.reference_bound,
            "rows": table.rows,
            "trend": trend,
        }),
    )?;
    let dest = out.commit()?;
    print!("{csv}");
    let z = if trend.z.is_nan() {
        "undefined (all trials agree)".to_string()
    } else {
        format!("{:.3}", trend.z)
    };
    println!(
        "trend z = {z}, significant drops {}, non-decreasing {}",
        trend.significant_drops.len(),
        trend.non_decreasing
    );
    println!("results in {}", dest.display());
    Ok(())
}

pub fn lambda(args: &CommonArgs) -> CliResult<()> {
    let mut cfg = Loaded::read(args)?;
    check_free(&cfg.out)?;
    let mut lam = cfg.file.lambda.clone().unwrap_or_default();
    lam.seed = cfg.resolve_seed(lam.seed);
    if lam.lambdas.is_empty() {
        return Err(CliError::Config("lambda.lambdas is empty".into()));
    }
    cfg.file.lambda = Some(lam.clone());
    let space = config::architecture(cfg.file.architecture.as_ref())?;
    let objective = config::objective(cfg.file.evaluator.as_ref(), space.n(), lam.seed, 1.0)?;
    let provenance = Provenance::new("lambda", &cfg.canonical(), &[], lam.seed)?;

    let table = lambda_stability(space.n(), objective.as_ref(), &lam, cfg.workers)?;
    drop(objective);
    let csv = table.to_csv();
    let out = OutputDir::create(&cfg.out, provenance)?;
    out.text("lambda.csv", &csv)?;
    out.json("summary.json", &json!({ "n": space.n(), "rows": table.rows }))?;
    let dest = out.commit()?;
    print!("{csv}");
    println!("results in {}", dest.display());
    Ok(())
}

pub fn recover(args: &CommonArgs) -> CliResult<()> {
    let mut cfg = Loaded::read(args)?;
    check_free(&cfg.out)?;
    let seed = cfg.resolve_seed(0);
    let sec = require(cfg.file.recover.clone(), "recover")?;
    let read = |p: &std::path::Path| {
        let path = cfg.dir.join(p);
        std::fs::read(&path).map_err(CliError::io(format!("reading {}", path.display())))
    };
    let matrix_bytes = read(&sec.matrix)?;
    let vector_bytes = read(&sec.vector)?;
    let utf8 = |b: &[u8], what: &str| {
        String::from_utf8(b.to_vec()).map_err(|_| CliError::Config(format!("recover.{what} is not UTF-8")))
    };
    let mut a = MeasurementMatrix::parse_dump(&utf8(&matrix_bytes, "matrix")?)?;
    if sec.normalize {
        a = a.normalized();
    }
    let y = parse_vector(&utf8(&vector_bytes, "vector")?)?;
    let provenance = Provenance::new("recover", &cfg.canonical(), &[&matrix_bytes, &vector_bytes], seed)?;

    let (sol, kkt) = match sec.method {
        RecoverMethod::Lasso => {
            if sec.groups.is_some() {
                return Err(CliError::Config(
                    "recover.groups requires method = \"group_lasso\"".into(),
                ));
            }
            let sol = lasso(&a, &y, sec.lambda, &sec.solver)?;
            let kkt = lasso_kkt_violation(&a, &y, sec.lambda, &sol.coefficients);
            (sol, kkt)
        }
        RecoverMethod::GroupLasso => {
            let groups = match &sec.groups {
                Some(blocks) => GroupStructure::with_sqrt_weights(
                    blocks
                        .iter()
                        .enumerate()
                        .map(|(i, b)| (format!("g{i}"), b.clone()))
                        .collect(),
                    a.cols(),
                )
                .map_err(|e| CliError::Config(format!("recover.groups: {e}")))?,
                None => GroupStructure::singletons(a.cols()),
            };
            let sol = group_lasso(&a, &groups, &y, sec.lambda, &sec.solver)?;
            let kkt = group_kkt_violation(&a, &groups, &y, sec.lambda, &sol.coefficients);
            (sol, kkt)
        }
    };
    if !sol.converged {
        log::warn!(
            "solver stopped after {} sweeps without converging",
            sol.iterations
        );
    }
    let support: Vec<usize> = (0..sol.coefficients.len())
        .filter(|&k| sol.coefficients[k] != 0.0)
        .collect();
    let out = OutputDir::create(&cfg.out, provenance)?;
    out.text("coefficients.txt", &format_vector(&sol.coefficients))?;
    out.json(
        "summary.json",
        &json!({
            "method": sec.method,
            "lambda": sec.lambda,
            "rows": a.rows(),
            "cols": a.cols(),
            "objective": sol.objective,
            "sweeps": sol.iterations,
            "converged": sol.converged,
            "kkt_violation": kkt,
            "support": support,
        }),
    )?;
    let dest = out.commit()?;
    println!(
        "{} nonzero of {} coefficients, objective {:.6e}, converged {}",
        support.len(),
        a.cols(),
        sol.objective,
        sol.converged
    );
    println!("results in {}", dest.display());
    Ok(())
}
