use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spectral_search::conas::{ArchitectureSpace, CellSpec, ConasConfig, DEFAULT_OPS};
use spectral_search::encoding::{CategorySpec, HyperparamSpace};
use spectral_search::evaluators::{
    planted_polynomial, ExternalEvaluator, ExternalOptions, Objective, PlantedObjective, PlantedSpec,
};
use spectral_search::experiments::{LambdaConfig, PhaseConfig};
use spectral_search::recovery::SolverOptions;
use spectral_search::rng::stream;
use spectral_search::scheduler::{PgsrConfig, SchedulerConfig};
use spectral_search::SparsePolynomial;

use crate::error::{CliError, CliResult};
use crate::{CommonArgs, Mode};

/// Stream label for drawing a random planted polynomial, kept apart from the
/// search streams that share the master seed.
const PLANTED_STREAM: u64 = 0x0070_6c61_6e74_6564;

/// Settings shared by every subcommand. Command-line flags take precedence.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub mode: Option<Mode>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub categories: Vec<CategorySpec>,
}

/// Either `intermediates` for the two-cell convolutional layout, or an
/// explicit `cells` list with optional `ops`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSection {
    pub intermediates: Option<usize>,
    pub cells: Option<Vec<CellSpec>>,
    pub ops: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoverMethod {
    #[default]
    Lasso,
    GroupLasso,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverSection {
    /// Whitespace-separated `±1` rows; relative to the configuration file.
    pub matrix: PathBuf,
    /// Observations, one per matrix row.
    pub vector: PathBuf,
    #[serde(default)]
    pub method: RecoverMethod,
    pub lambda: f64,
    /// Column blocks for Group Lasso, weighted by the square root of their
    /// size. Every column its own block when absent.
    pub groups: Option<Vec<Vec<usize>>>,
    /// Scale the matrix and observations by `1/sqrt(rows)`.
    #[serde(default = "yes")]
    pub normalize: bool,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaluatorSection {
    Planted(PlantedSection),
    External(ExternalOptions),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedSection {
    /// Terms as `vars : coefficient` lines with 1-based variables, `0` for
    /// the constant.
    pub polynomial: Option<String>,
    pub random: Option<RandomPlanted>,
    #[serde(default)]
    pub sigma: f64,
    /// Extra loss `penalty * (R - r) / R` at resource `r`.
    #[serde(default)]
    pub resource_penalty: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPlanted {
    pub degree: usize,
    pub sparsity: usize,
    #[serde(default = "half")]
    pub min_abs: f64,
    #[serde(default = "one_and_half")]
    pub max_abs: f64,
    #[serde(default)]
    pub disjoint: bool,
    #[serde(default)]
    pub constant: f64,
}

fn half() -> f64 {
    0.5
}

fn one_and_half() -> f64 {
    1.5
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub run: RunSection,
    pub space: Option<SpaceSection>,
    pub scheduler: Option<SchedulerConfig>,
    pub pgsr: Option<PgsrConfig>,
    pub architecture: Option<ArchitectureSection>,
    pub conas: Option<ConasConfig>,
    pub phase: Option<PhaseConfig>,
    pub lambda: Option<LambdaConfig>,
    pub recover: Option<RecoverSection>,
    pub evaluator: Option<EvaluatorSection>,
}

/// A parsed configuration with command-line overrides applied.
pub struct Loaded {
    pub file: FileConfig,
    /// Directory of the configuration file, for relative input paths.
    pub dir: PathBuf,
    pub seed: Option<u64>,
    pub workers: usize,
    pub out: PathBuf,
}

impl Loaded {
    pub fn read(args: &CommonArgs) -> CliResult<Self> {
        let text = std::fs::read_to_string(&args.config)
            .map_err(CliError::io(format!("reading {}", args.config.display())))?;
        let file: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
        let workers = args.workers.or(file.run.workers).unwrap_or(1);
        if workers < 1 {
            return Err(CliError::Config("run.workers must be at least 1".into()));
        }
        let out = args
            .out
            .clone()
            .or_else(|| file.run.out.clone())
            .ok_or_else(|| CliError::Config("no output directory: pass --out or set run.out".into()))?;
        Ok(Self {
            dir: args.config.parent().map(Path::to_path_buf).unwrap_or_default(),
            seed: args.seed.or(file.run.seed),
            file,
            workers,
            out,
        })
    }

    /// Seed from the flag or `run.seed`, else `fallback`. The result is
    /// written back to `run.seed` so the hashed configuration carries it.
    pub fn resolve_seed(&mut self, fallback: u64) -> u64 {
        let seed = self.seed.unwrap_or(fallback);
        self.file.run.seed = Some(seed);
        seed
    }

    /// The configuration as it affects results: output location and worker
    /// count are left out.
    pub fn canonical(&self) -> FileConfig {
        let mut c = self.file.clone();
        c.run.out = None;
        c.run.workers = None;
        c
    }
}

pub fn require<T>(section: Option<T>, name: &str) -> CliResult<T> {
    section.ok_or_else(|| CliError::Config(format!("missing section [{name}]")))
}

pub fn hyperparam_space(section: &SpaceSection) -> CliResult<HyperparamSpace> {
    if section.categories.is_empty() {
        return Err(CliError::Config("space.categories is empty".into()));
    }
    Ok(HyperparamSpace::from_specs(&section.categories)?)
}

pub fn architecture(section: Option<&ArchitectureSection>) -> CliResult<ArchitectureSpace> {
    let Some(a) = section else {
        return Ok(ArchitectureSpace::convolutional(4));
    };
    match (&a.cells, a.intermediates) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "architecture: give either cells or intermediates, not both".into(),
        )),
        (Some(cells), None) => {
            let ops = a
                .ops
                .clone()
                .unwrap_or_else(|| DEFAULT_OPS.iter().map(|s| s.to_string()).collect());
            Ok(ArchitectureSpace::new(cells.clone(), ops)?)
        }
        (None, intermediates) => {
            if a.ops.is_some() {
                return Err(CliError::Config(
                    "architecture.ops requires architecture.cells".into(),
                ));
            }
            let k = intermediates.unwrap_or(4);
            if k < 1 {
                return Err(CliError::Config(
                    "architecture.intermediates must be at least 1".into(),
                ));
            }
            Ok(ArchitectureSpace::convolutional(k))
        }
    }
}

/// Builds the objective over `n` bits. `max_resource` is the resource of a
/// full evaluation.
pub fn objective(
    section: Option<&EvaluatorSection>,
    n: usize,
    seed: u64,
    max_resource: f64,
) -> CliResult<Box<dyn Objective>> {
    match require(section, "evaluator")? {
        EvaluatorSection::External(opts) => {
            if opts.command.is_empty() {
                return Err(CliError::Config("evaluator.command is empty".into()));
            }
            Ok(Box::new(ExternalEvaluator::spawn(opts, Some(n))?))
        }
        EvaluatorSection::Planted(p) => {
            let truth = match (&p.polynomial, &p.random) {
                (Some(text), None) => SparsePolynomial::parse(text, n)
                    .map_err(|e| CliError::Config(format!("evaluator.polynomial: {e}")))?,
                (None, Some(r)) => {
                    let spec = PlantedSpec {
                        n,
                        degree: r.degree,
                        sparsity: r.sparsity,
                        min_abs: r.min_abs,
                        max_abs: r.max_abs,
                        disjoint: r.disjoint,
                        constant: r.constant,
                    };
                    planted_polynomial(&spec, &mut stream(seed, &[PLANTED_STREAM]))
                        .map_err(|e| CliError::Config(format!("evaluator.random: {e}")))?
                }
                _ => {
                    return Err(CliError::Config(
                        "planted evaluator needs exactly one of evaluator.polynomial, evaluator.random"
                            .into(),
                    ))
                }
            };
            let objective = PlantedObjective::new(truth, p.sigma, seed)
                .and_then(|o| o.with_resource_curve(max_resource, p.resource_penalty))
                .map_err(|e| CliError::Config(format!("evaluator: {e}")))?;
            Ok(Box::new(objective))
        }
    }
}
