//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use spectral_search::conas::{conas_search, hamming, ConasConfig, ConasOptions};
use spectral_search::encoding::{group_columns, Category, HyperparamSpace};
use spectral_search::evaluators::{
    planted_polynomial, Dispatcher, EvalRequest, EvaluationHistory, EvaluationRecord, ExternalEvaluator,
    ExternalOptions, Objective, PlantedObjective, PlantedSpec,
};
use spectral_search::experiments::{
    frozen_lambda_stability, phase_transition, phase_trial, trend_test, LambdaConfig, PhaseConfig,
};
use spectral_search::fourier::{
    basis_size, brute_force_transform, minimize_over_support, restrict, BasisFamily, BooleanPoint,
    MonomialIndex, OracleLimits, Restriction, SparsePolynomial,
};
use spectral_search::recovery::{
    build_sampling_matrix, group_kkt_violation, group_lasso, lasso, lasso_kkt_violation, top_s,
    GroupStructure, MeasurementMatrix, SolverOptions,
};
use spectral_search::rng::stream;
use spectral_search::scheduler::{
    hyperband, pgsr_hb, pgsr_sampling, PgsrConfig, RunOptions, SchedulerConfig,
};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn support(p: &SparsePolynomial) -> BTreeSet<MonomialIndex> {
    p.terms()
        .filter(|(s, c)| !s.is_empty() && *c != 0.0)
        .map(|(s, _)| s.clone())
        .collect()
}

/// The planted minimum is still reachable after fixing `r`.
fn argmin_reachable(truth: &SparsePolynomial, r: &Restriction) -> bool {
    let lim = OracleLimits::default();
    let best = minimize_over_support(truth, &lim).unwrap().value;
    let reach = minimize_over_support(&restrict(truth, r).unwrap(), &lim)
        .unwrap()
        .value;
    reach <= best + 1e-9
}

// 1 -------------------------------------------------------------------------

fn parity_sign(mask: usize, x: usize) -> f64 {
    if (mask & x).count_ones() % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

fn fourier_oracle() -> Check {
    let lim = OracleLimits::default();
    let mut worst = [0.0f64; 3];
    for n in [4usize, 8, 12] {
        let size = 1usize << n;
        for f in 0..200u64 {
            let mut rng = stream(1, &[n as u64, f]);
            let table: Vec<f64> = (0..size).map(|_| StandardNormal.sample(&mut rng)).collect();
            let coef = brute_force_transform(&table, &lim).unwrap();
            let mut dense = vec![0.0; size];
            for (s, c) in coef.terms() {
                dense[s.vars().iter().map(|&v| 1usize << v).sum::<usize>()] = c;
            }

            let energy = table.iter().map(|v| v * v).sum::<f64>() / size as f64;
            let parseval = (dense.iter().map(|c| c * c).sum::<f64>() - energy).abs();
            worst[1] = worst[1].max(parseval);

            for (x, &v) in table.iter().enumerate() {
                let back: f64 = dense.iter().enumerate().map(|(s, c)| c * parity_sign(s, x)).sum();
                worst[2] = worst[2].max((back - v).abs());
            }

            let (s, t) = (rng.random_range(0..size), rng.random_range(0..size));
            let product: Vec<f64> = (0..size).map(|x| parity_sign(s, x) * parity_sign(t, x)).collect();
            let chi = brute_force_transform(&product, &lim).unwrap();
            let mut expect = vec![0.0; size];
            expect[s ^ t] = 1.0;
            for (u, c) in chi.terms() {
                let mask = u.vars().iter().map(|&v| 1usize << v).sum::<usize>();
                expect[mask] -= c;
            }
            worst[0] = worst[0].max(expect.iter().fold(0.0, |a, b| a.max(b.abs())));
        }
    }
    ensure(
        worst.iter().all(|&w| w <= 1e-12),
        format!(
            "600 functions; orthonormality {:.1e}, Parseval {:.1e}, round trip {:.1e} (limit 1e-12)",
            worst[0], worst[1], worst[2]
        ),
    )
}

// 2 -------------------------------------------------------------------------

fn random_matrix<R: Rng>(m: usize, p: usize, rng: &mut R) -> MeasurementMatrix {
    let rows: Vec<Vec<i8>> = (0..m)
        .map(|_| {
            (0..p)
                .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
                .collect()
        })
        .collect();
    MeasurementMatrix::from_rows(&rows).unwrap().normalized()
}

fn random_groups<R: Rng>(p: usize, rng: &mut R) -> GroupStructure {
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < p {
        let w = rng.random_range(1..=4).min(p - start);
        blocks.push((format!("b{start}"), (start..start + w).collect()));
        start += w;
    }
    GroupStructure::with_sqrt_weights(blocks, p).unwrap()
}

fn least_squares(a: &MeasurementMatrix, y: &[f64]) -> Vec<f64> {
    let dm = DMatrix::from_fn(a.rows(), a.cols(), |i, j| a.sign(i, j) as f64);
    let svd = dm.svd(true, true);
    svd.solve(&DVector::from_column_slice(y), 1e-12)
        .unwrap()
        .as_slice()
        .to_vec()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn solver_correctness() -> Check {
    let opts = SolverOptions::default();
    // Flagged non-convergence is left to the caller; here the caller retries
    // with a larger sweep budget.
    let extended = SolverOptions {
        max_sweeps: 200_000,
        ..opts
    };
    let (mut kkt_l, mut kkt_g) = (0.0f64, 0.0f64);
    let (mut retried, mut unconverged) = (0, 0);
    for i in 0..100u64 {
        let mut rng = stream(2, &[i]);
        let m = rng.random_range(20..60);
        let p = rng.random_range(10..80);
        let a = random_matrix(m, p, &mut rng);
        let y: Vec<f64> = (0..m)
            .map(|_| 2.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let lam = rng.random_range(0.01..1.0);
        let mut sol = lasso(&a, &y, lam, &opts).unwrap();
        if !sol.converged {
            retried += 1;
            sol = lasso(&a, &y, lam, &extended).unwrap();
        }
        unconverged += usize::from(!sol.converged);
        kkt_l = kkt_l.max(lasso_kkt_violation(&a, &y, lam, &sol.coefficients));
        let groups = random_groups(p, &mut rng);
        let mut sol = group_lasso(&a, &groups, &y, lam, &opts).unwrap();
        if !sol.converged {
            retried += 1;
            sol = group_lasso(&a, &groups, &y, lam, &extended).unwrap();
        }
        unconverged += usize::from(!sol.converged);
        kkt_g = kkt_g.max(group_kkt_violation(&a, &groups, &y, lam, &sol.coefficients));
    }

    let mut ls = 0.0f64;
    for i in 0..20u64 {
        let mut rng = stream(3, &[i]);
        let a = random_matrix(60, 15, &mut rng);
        let y: Vec<f64> = (0..60).map(|_| StandardNormal.sample(&mut rng)).collect();
        let exact = least_squares(&a, &y);
        ls = ls.max(max_diff(&lasso(&a, &y, 0.0, &opts).unwrap().coefficients, &exact));
        let groups = random_groups(15, &mut rng);
        ls = ls.max(max_diff(
            &group_lasso(&a, &groups, &y, 0.0, &opts).unwrap().coefficients,
            &exact,
        ));
    }

    // Full parity design on 4 bits: columns are orthogonal.
    let basis = BasisFamily::enumerate(4, 4).unwrap();
    let points: Vec<BooleanPoint> = (0..16).map(|x| BooleanPoint::from_index(x, 4)).collect();
    let a = build_sampling_matrix(&points, &basis).unwrap().normalized();
    let mut closed = 0.0f64;
    for i in 0..20u64 {
        let mut rng = stream(4, &[i]);
        let y: Vec<f64> = (0..16).map(|_| StandardNormal.sample(&mut rng)).collect();
        let lam = rng.random_range(0.05..1.5);
        let z: Vec<f64> = (0..16)
            .map(|j| (0..16).map(|r| a.sign(r, j) as f64 * y[r]).sum::<f64>() / 16.0)
            .collect();
        let soft: Vec<f64> = z
            .iter()
            .map(|v| v.signum() * (v.abs() - lam / 2.0).max(0.0))
            .collect();
        closed = closed.max(max_diff(&lasso(&a, &y, lam, &opts).unwrap().coefficients, &soft));

        let groups = random_groups(16, &mut rng);
        let mut shrink = vec![0.0; 16];
        for g in groups.groups() {
            let norm = g.columns.iter().map(|&c| z[c] * z[c]).sum::<f64>().sqrt();
            let factor = (1.0 - lam * g.weight / norm).max(0.0);
            for &c in &g.columns {
                shrink[c] = factor * z[c];
            }
        }
        closed = closed.max(max_diff(
            &group_lasso(&a, &groups, &y, lam, &opts).unwrap().coefficients,
            &shrink,
        ));
    }
    ensure(
        unconverged == 0 && kkt_l <= 1e-6 && kkt_g <= 1e-6 && ls <= 1e-6 && closed <= 1e-8,
        format!(
            "KKT lasso {kkt_l:.1e}, group {kkt_g:.1e} over 100 instances each \
             ({retried} needed more than the default sweep budget, {unconverged} unconverged); \
             lambda=0 vs least squares {ls:.1e}; orthonormal closed form {closed:.1e}"
        ),
    )
}

// 3 -------------------------------------------------------------------------

fn planted_recovery() -> Check {
    let cfg = PhaseConfig {
        m_grid: vec![400],
        seed: 3,
        ..PhaseConfig::default()
    };
    let basis = BasisFamily::enumerate(20, 2).unwrap();
    let ok = (0..50)
        .filter(|&t| phase_trial(&cfg, &basis, 400, t).unwrap().success)
        .count();
    ensure(
        ok >= 45,
        format!("n=20 d=2 s*=5 m=400 lambda=0.1: exact support in {ok}/50 trials (need 45)"),
    )
}

// 4 -------------------------------------------------------------------------

fn phase_monotone() -> Check {
    let cfg = PhaseConfig {
        seed: 4,
        ..PhaseConfig::default()
    };
    let coarse = phase_transition(&cfg, 1).unwrap();
    let coarse_trend = trend_test(&coarse.rows);
    let fine = phase_transition(
        &PhaseConfig {
            m_grid: (1..=12).map(|k| 5 * k).collect(),
            ..cfg.clone()
        },
        1,
    )
    .unwrap();
    let fine_trend = trend_test(&fine.rows);
    let full = basis_size(20, 2) as usize;
    let determined = phase_transition(
        &PhaseConfig {
            m_grid: vec![full],
            lambda: 1e-7,
            ..cfg.clone()
        },
        1,
    )
    .unwrap();
    let rates = |t: &spectral_search::experiments::PhaseTable| {
        t.rows
            .iter()
            .map(|r| format!("{:.2}", r.success_rate))
            .collect::<Vec<_>>()
            .join(" ")
    };
    ensure(
        coarse_trend.non_decreasing && fine_trend.non_decreasing && determined.rows[0].success_rate == 1.0,
        format!(
            "m=50..600 rates [{}] drops {:?}; m=5..60 rates [{}] trend z={:.2}; m={full} lambda=1e-7 rate {:.2}",
            rates(&coarse),
            coarse_trend.significant_drops,
            rates(&fine),
            fine_trend.z,
            determined.rows[0].success_rate
        ),
    )
}

// 5 -------------------------------------------------------------------------

fn budget_arithmetic() -> Check {
    let cfg = SchedulerConfig::new(243, 3, 1).unwrap();
    let expected: [(usize, usize, f64); 6] = [
        (5, 243, 1.0),
        (4, 98, 3.0),
        (3, 41, 9.0),
        (2, 18, 27.0),
        (1, 9, 81.0),
        (0, 6, 243.0),
    ];
    let plans = cfg.brackets();
    let table_ok = plans.len() == 6
        && plans
            .iter()
            .zip(&expected)
            .all(|(p, &(s, n, r))| p.s == s && p.n == n && p.r == r);

    let obj = spectral_search::evaluators::FnObjective::new("zero", |_: &BooleanPoint, _| 0.0);
    let out = hyperband(&cfg, 4, &obj, &RunOptions::seeded(5)).unwrap();
    let recs = out.history.records();
    let mut at = 0;
    let mut totals_ok = true;
    for (plan, &(s, n, _)) in plans.iter().zip(&expected) {
        let closed: u64 = (0..=s as u32)
            .map(|i| (n as u64 / 3u64.pow(i)) * 3u64.pow(i) * 243 / 3u64.pow(s as u32))
            .sum();
        let count: usize = plan.rounds.iter().map(|r| r.n_i).sum();
        let executed: f64 = recs[at..at + count].iter().map(|r| r.resource).sum();
        at += count;
        totals_ok &= plan.total_work() == closed as f64
            && executed == closed as f64
            && closed <= cfg.budget() + 5 * 243;
    }
    totals_ok &= at == recs.len();
    ensure(
        cfg.s_max() == 5 && cfg.budget() == 1458 && table_ok && totals_ok,
        format!(
            "R=243 eta=3: s_max={} B={} brackets {:?}; planned and executed totals {:?}",
            cfg.s_max(),
            cfg.budget(),
            plans.iter().map(|p| (p.n, p.r)).collect::<Vec<_>>(),
            plans.iter().map(|p| p.total_work()).collect::<Vec<_>>()
        ),
    )
}

// 6 -------------------------------------------------------------------------

fn two_category_space() -> HyperparamSpace {
    HyperparamSpace::new(vec![
        Category::new("lr", 3, -6, vec![1.0, 2.5, 5.0, 7.5]).unwrap(),
        Category::new("wd", 3, -6, vec![1.0, 2.5, 5.0, 7.5]).unwrap(),
    ])
    .unwrap()
}

const BASIN: [i32; 2] = [-3, -4];

/// Quadratic bowl in both exponents plus a weak mantissa slope.
fn bowl(space: &HyperparamSpace, p: &BooleanPoint) -> f64 {
    (0..2)
        .map(|i| {
            let d = space.decode_category(p, i).unwrap();
            0.1 * f64::from(d.exponent - BASIN[i]).powi(2) + 0.02 * d.mantissa_index as f64
        })
        .sum()
}

fn degenerate_equivalence() -> Check {
    let space = two_category_space();
    let cfg = SchedulerConfig::new(27, 3, 2).unwrap();
    let never = PgsrConfig {
        min_observations: usize::MAX,
        ..PgsrConfig::default()
    };
    let mut identical = 0;
    for seed in 0..5u64 {
        let truth = planted_polynomial(
            &PlantedSpec {
                n: space.n(),
                degree: 2,
                sparsity: 6,
                min_abs: 0.5,
                max_abs: 1.5,
                disjoint: false,
                constant: 1.0,
            },
            &mut stream(seed, &[6]),
        )
        .unwrap();
        let obj = PlantedObjective::new(truth, 0.1, seed)
            .unwrap()
            .with_resource_curve(27.0, 1.0)
            .unwrap();
        let opts = RunOptions::seeded(seed);
        let a = pgsr_hb(&cfg, &never, &space, &obj, &opts).unwrap();
        let b = hyperband(&cfg, space.n(), &obj, &opts).unwrap();
        if a.history.same_outcomes(&b.history) && a.best == b.best && a.brackets == b.brackets {
            identical += 1;
        }
    }
    ensure(
        identical == 5,
        format!("T=inf vs hyperband: {identical}/5 seeds with identical histories"),
    )
}

// 7 -------------------------------------------------------------------------

fn domain_reduction() -> Check {
    let space = two_category_space();
    let target = space.encode_indices(&[(BASIN[0], 0), (BASIN[1], 0)]).unwrap();
    let pgsr = PgsrConfig {
        sparsity: 14,
        degree: 2,
        min_observations: 60,
        rho: 0.0,
        lambda: 0.001,
        ..PgsrConfig::default()
    };
    let mut fixed_basin = 0;
    for seed in 0..50u64 {
        let mut rng = stream(seed, &[7, 1]);
        let mut h = EvaluationHistory::new();
        for j in 0..60u64 {
            let p = BooleanPoint::uniform(space.n(), &mut rng);
            let noise: f64 = StandardNormal.sample(&mut rng);
            let loss = bowl(&space, &p) + 0.05 * noise;
            h.append(EvaluationRecord {
                seq: j,
                point: p,
                resource: 27.0,
                loss,
                wall_time: 0.0,
                evaluator: "bowl".into(),
            })
            .unwrap();
        }
        let draw = pgsr_sampling(&h, &pgsr, &space, 8, &OracleLimits::default(), &mut rng).unwrap();
        if let Some(rec) = draw.recovery {
            let hit = (0..2).all(|i| {
                space
                    .exponent_bits(i)
                    .all(|b| rec.restriction.fixed().get(&b) == Some(&target.get(b)))
            });
            fixed_basin += usize::from(hit);
        }
    }

    // Two whole column groups carry the signal.
    let grouped = HyperparamSpace::new(
        (0..4)
            .map(|i| Category::with_default_mantissa(format!("c{i}"), 2, -2, 1).unwrap())
            .collect(),
    )
    .unwrap();
    let basis = BasisFamily::enumerate(grouped.n(), 2).unwrap();
    let groups = group_columns(&grouped, &basis).unwrap();
    let m = 20;
    let (mut group_ok, mut plain_ok) = (0, 0);
    for trial in 0..50u64 {
        let mut rng = stream(trial, &[7, 2]);
        let mut pool: Vec<usize> = (1..groups.len()).collect();
        let mut terms = Vec::new();
        for _ in 0..2 {
            let g = pool.remove(rng.random_range(0..pool.len()));
            for &c in &groups.groups()[g].columns {
                let mag = rng.random_range(0.5..1.5);
                terms.push((
                    basis.get(c).clone(),
                    if rng.random_bool(0.5) { mag } else { -mag },
                ));
            }
        }
        let truth = SparsePolynomial::from_terms(grouped.n(), terms).unwrap();
        let points: Vec<BooleanPoint> = (0..m)
            .map(|_| BooleanPoint::uniform(grouped.n(), &mut rng))
            .collect();
        let y: Vec<f64> = points.iter().map(|p| truth.eval(p).unwrap()).collect();
        let a = build_sampling_matrix(&points, &basis).unwrap().normalized();
        let opts = SolverOptions::default();
        let s = truth.len();
        let g = group_lasso(&a, &groups, &y, 0.05, &opts).unwrap();
        group_ok += usize::from(support(&top_s(&g, s, &basis).unwrap()) == support(&truth));
        let l = lasso(&a, &y, 0.05, &opts).unwrap();
        plain_ok += usize::from(support(&top_s(&l, s, &basis).unwrap()) == support(&truth));
    }
    ensure(
        fixed_basin >= 45 && group_ok >= 45 && plain_ok < group_ok,
        format!(
            "basin exponent bits fixed in {fixed_basin}/50 runs (need 45); \
             m={m}: group lasso {group_ok}/50 vs lasso {plain_ok}/50"
        ),
    )
}

// 8 -------------------------------------------------------------------------

fn conas_end_to_end() -> Check {
    let mut matched = 0;
    for trial in 0..20u64 {
        let mut rng = stream(trial, &[8, 1]);
        let spec = PlantedSpec {
            n: 140,
            degree: 2,
            sparsity: 10,
            min_abs: 0.5,
            max_abs: 1.5,
            disjoint: false,
            constant: 3.0,
        };
        let truth = planted_polynomial(&spec, &mut rng).unwrap();
        let obj = PlantedObjective::new(truth.clone(), 0.1, trial).unwrap();
        let cfg = ConasConfig {
            m: 1000,
            stages: 1,
            sparsity: 10,
            degree: 2,
            lambda: 0.1,
            ..ConasConfig::default()
        };
        let out = conas_search(
            140,
            &obj,
            &cfg,
            &ConasOptions {
                seed: trial,
                ..Default::default()
            },
        )
        .unwrap();
        matched += usize::from(argmin_reachable(&truth, &out.restriction));
    }

    // Ten strong terms hide ten weak ones on disjoint variables.
    let mut more = 0;
    let mut counts = Vec::new();
    for inst in 0..5u64 {
        let mut rng = stream(inst, &[8, 2]);
        let spec = PlantedSpec {
            n: 140,
            degree: 2,
            sparsity: 20,
            min_abs: 0.4,
            max_abs: 0.6,
            disjoint: true,
            constant: 0.0,
        };
        let base = planted_polynomial(&spec, &mut rng).unwrap();
        let truth = SparsePolynomial::from_terms(
            140,
            base.terms()
                .enumerate()
                .map(|(k, (s, c))| (s.clone(), if k % 2 == 0 { 8.0 * c } else { c })),
        )
        .unwrap();
        let planted = support(&truth);
        let obj = PlantedObjective::new(truth, 0.05, inst).unwrap();
        let recovered = |stages: usize| {
            let cfg = ConasConfig {
                m: 1000,
                stages,
                sparsity: 10,
                degree: 2,
                lambda: 0.05,
                ..ConasConfig::default()
            };
            let out = conas_search(
                140,
                &obj,
                &cfg,
                &ConasOptions {
                    seed: inst,
                    ..Default::default()
                },
            )
            .unwrap();
            let found: BTreeSet<MonomialIndex> =
                out.stages.iter().flat_map(|s| support(&s.surrogate)).collect();
            found.intersection(&planted).count()
        };
        let (one, two) = (recovered(1), recovered(2));
        counts.push((one, two));
        more += usize::from(two > one);
    }
    ensure(
        matched >= 18 && more == 5,
        format!(
            "n=140 m=1000 s=10 t=1: planted minimizer kept in {matched}/20 trials (need 18); \
             two-scale planted terms recovered (t=1, t=2) {counts:?}"
        ),
    )
}

// 9 -------------------------------------------------------------------------

fn lambda_stable() -> Check {
    let mut worst = 0;
    let mut supports = Vec::new();
    for inst in 0..5u64 {
        let mut rng = stream(inst, &[9]);
        let spec = PlantedSpec {
            n: 140,
            degree: 2,
            sparsity: 10,
            min_abs: 3.0,
            max_abs: 5.0,
            disjoint: true,
            constant: 10.0,
        };
        let truth = planted_polynomial(&spec, &mut rng).unwrap();
        let obj = PlantedObjective::new(truth, 0.1, inst).unwrap();
        let points: Vec<BooleanPoint> = (0..1000).map(|_| BooleanPoint::uniform(140, &mut rng)).collect();
        let y: Vec<f64> = points
            .iter()
            .enumerate()
            .map(|(j, p)| {
                obj.evaluate(&EvalRequest {
                    seq: j as u64,
                    point: p.clone(),
                    resource: 1.0,
                })
                .unwrap()
            })
            .collect();
        let cfg = LambdaConfig {
            sparsity: 10,
            lambdas: vec![1.0, 0.5, 2.0],
            ..LambdaConfig::default()
        };
        let table = frozen_lambda_stability(&points, &y, &cfg).unwrap();
        let alphas: Vec<BooleanPoint> = table
            .rows
            .iter()
            .map(|r| {
                BooleanPoint::new(r.alpha.chars().map(|c| if c == '+' { 1 } else { -1 }).collect()).unwrap()
            })
            .collect();
        for i in 0..alphas.len() {
            for j in i + 1..alphas.len() {
                worst = worst.max(hamming(&alphas[i], &alphas[j]).unwrap());
            }
        }
        supports.push(table.rows.iter().map(|r| r.support_size).collect::<Vec<_>>());
    }
    ensure(
        worst == 0,
        format!("lambda in {{1, 0.5, 2}} on 5 instances: max pairwise Hamming {worst}; support sizes {supports:?}"),
    )
}

// 10 ------------------------------------------------------------------------

fn echo_script() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/echo_evaluator.py")
}

fn protocol_and_persistence() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;

    for extra in [None, Some("--reverse-pairs")] {
        let mut command = vec![
            "python3".to_string(),
            echo_script().display().to_string(),
            "--n".into(),
            "8".into(),
        ];
        command.extend(extra.map(String::from));
        let ev = ExternalEvaluator::spawn(
            &ExternalOptions {
                command,
                timeout_secs: 30.0,
                id: "echo".into(),
            },
            Some(8),
        )
        .unwrap();
        let reqs: Vec<EvalRequest> = (0..256u64)
            .map(|x| EvalRequest {
                seq: x,
                point: BooleanPoint::from_index(x, 8),
                resource: 1.0,
            })
            .collect();
        let got = Dispatcher::new(4).unwrap().run(&ev, &reqs);
        let exact = reqs
            .iter()
            .zip(&got)
            .all(|(r, g)| matches!(g.loss, Ok(v) if v == r.point.count_active() as f64));
        ok &= exact;
        notes.push(format!(
            "echo{} 256/256 {}",
            extra.map(|e| format!(" {e}")).unwrap_or_default(),
            if exact { "exact" } else { "MISMATCH" }
        ));
    }

    let space = two_category_space();
    let sp = space.clone();
    let obj = spectral_search::evaluators::FnObjective::new("bowl", move |p: &BooleanPoint, r: f64| {
        bowl(&sp, p) + 0.5 * (27.0 - r) / 27.0
    });
    let pgsr = PgsrConfig {
        sparsity: 14,
        min_observations: 20,
        lambda: 0.01,
        ..PgsrConfig::default()
    };
    let full = SchedulerConfig::new(27, 3, 2).unwrap();
    let single = pgsr_hb(&full, &pgsr, &space, &obj, &RunOptions::seeded(10)).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("history.jsonl");
    let first = pgsr_hb(
        &SchedulerConfig::new(27, 3, 1).unwrap(),
        &pgsr,
        &space,
        &obj,
        &RunOptions::seeded(10),
    )
    .unwrap();
    first.history.save(&path).unwrap();
    let loaded = EvaluationHistory::load(&path).unwrap();
    let lossless = loaded == first.history;
    ok &= lossless;
    notes.push(format!(
        "history {} records reloaded {}",
        loaded.len(),
        if lossless { "field-exact" } else { "DIFFERENT" }
    ));

    let resumed = pgsr_hb(
        &full,
        &pgsr,
        &space,
        &obj,
        &RunOptions {
            seed: 10,
            start_cycle: 1,
            history: loaded,
            ..RunOptions::default()
        },
    )
    .unwrap();
    let same = resumed.history.same_outcomes(&single.history) && resumed.best == single.best;
    let straight_to_recovery = resumed.brackets.first().is_some_and(|b| b.recovery.is_some());
    ok &= same && straight_to_recovery;
    notes.push(format!(
        "resumed run {} single run, first resumed bracket {}",
        if same { "equals" } else { "DIFFERS FROM" },
        if straight_to_recovery {
            "uses recovery"
        } else {
            "samples uniformly"
        }
    ));
    ensure(ok, notes.join("; "))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Fourier oracle identities", fourier_oracle),
        ("solver correctness", solver_correctness),
        ("planted recovery", planted_recovery),
        ("phase transition monotone", phase_monotone),
        ("budget arithmetic", budget_arithmetic),
        ("degenerate equivalence", degenerate_equivalence),
        ("PGSR domain reduction", domain_reduction),
        ("CoNAS end to end", conas_end_to_end),
        ("lambda stability", lambda_stable),
        ("protocol and persistence", protocol_and_persistence),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
