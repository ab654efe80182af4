use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{EvalRequest, Objective};
use crate::fourier::{BasisFamily, MonomialIndex, SparsePolynomial};
use crate::rng;
use crate::{Error, Result};

/// Synthetic objective built on a known sparse polynomial.
///
/// `loss(a, r) = f*(a) + noise + penalty * (R - r) / R`, with Gaussian noise
/// drawn from a counter-based stream keyed by `(seed, a, r, seq)`, so a
/// value never depends on evaluation order.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedObjective {
    truth: SparsePolynomial,
    sigma: f64,
    seed: u64,
    max_resource: f64,
    resource_penalty: f64,
    id: String,
}

impl PlantedObjective {
    pub fn new(truth: SparsePolynomial, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Argument(format!("noise sigma must be >= 0, got {sigma}")));
        }
        Ok(Self {
            truth,
            sigma,
            seed,
            max_resource: 1.0,
            resource_penalty: 0.0,
            id: "planted".into(),
        })
    }

    /// Losses at resource `r < R` are inflated by `penalty * (R - r) / R`.
    pub fn with_resource_curve(mut self, max_resource: f64, penalty: f64) -> Result<Self> {
        if !(max_resource > 0.0 && max_resource.is_finite()) {
            return Err(Error::Argument(format!("max resource {max_resource}")));
        }
        self.max_resource = max_resource;
        self.resource_penalty = penalty;
        Ok(self)
    }

    pub fn truth(&self) -> &SparsePolynomial {
        &self.truth
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn max_resource(&self) -> f64 {
        self.max_resource
    }

    pub fn planted_eval(&self, request: &EvalRequest) -> Result<f64> {
        let r = request.resource;
        if !(r > 0.0 && r <= self.max_resource * (1.0 + 1e-12)) {
            return Err(Error::Argument(format!(
                "resource {r} outside (0, {}]",
                self.max_resource
            )));
        }
        let mut value = self.truth.eval(&request.point)?;
        value += self.resource_penalty * (self.max_resource - r).max(0.0) / self.max_resource;
        if self.sigma > 0.0 {
            let mut path: Vec<u64> = request
                .point
                .bits()
                .chunks(64)
                .map(|chunk| {
                    chunk
                        .iter()
                        .enumerate()
                        .fold(0u64, |acc, (i, &b)| if b > 0 { acc | 1 << i } else { acc })
                })
                .collect();
            path.push(r.to_bits());
            path.push(request.seq);
            let z: f64 = StandardNormal.sample(&mut rng::stream(self.seed, &path));
            value += self.sigma * z;
        }
        Ok(value)
    }
}

impl Objective for PlantedObjective {
    fn id(&self) -> &str {
        &self.id
    }

    fn evaluate(&self, request: &EvalRequest) -> Result<f64> {
        self.planted_eval(request)
    }
}

/// Recipe for a random planted polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub n: usize,
    pub degree: usize,
    pub sparsity: usize,
    /// Coefficient magnitudes are uniform in `[min_abs, max_abs]` with random sign.
    pub min_abs: f64,
    pub max_abs: f64,
    /// Use only terms whose variable sets are pairwise disjoint, so the
    /// minimizer is unique and sign-determined.
    #[serde(default)]
    pub disjoint: bool,
    /// Constant offset added to the polynomial.
    #[serde(default)]
    pub constant: f64,
}

/// Draws a polynomial with exactly `sparsity` non-constant terms of degree
/// `1..=degree`, chosen uniformly from the degree-`degree` basis.
pub fn planted_polynomial<R: Rng + ?Sized>(spec: &PlantedSpec, rng: &mut R) -> Result<SparsePolynomial> {
    if spec.degree == 0 || spec.degree > spec.n {
        return Err(Error::Argument(format!(
            "planted degree {} for n = {}",
            spec.degree, spec.n
        )));
    }
    if !(spec.min_abs > 0.0 && spec.min_abs <= spec.max_abs) {
        return Err(Error::Argument(
            "planted magnitudes need 0 < min_abs <= max_abs".into(),
        ));
    }
    let mut terms: Vec<(MonomialIndex, f64)> = Vec::with_capacity(spec.sparsity + 1);
    let coef = |rng: &mut R| {
        let mag = rng.random_range(spec.min_abs..=spec.max_abs);
        if rng.random_bool(0.5) {
            mag
        } else {
            -mag
        }
    };
    if spec.disjoint {
        let mut vars: Vec<usize> = sample(rng, spec.n, spec.n).into_vec();
        for _ in 0..spec.sparsity {
            let deg = rng.random_range(1..=spec.degree);
            if vars.len() < deg {
                return Err(Error::Argument(format!(
                    "cannot fit {} disjoint terms into {} variables",
                    spec.sparsity, spec.n
                )));
            }
            let s: Vec<usize> = vars.drain(..deg).collect();
            terms.push((MonomialIndex::new(s)?, coef(rng)));
        }
    } else {
        let basis = BasisFamily::enumerate(spec.n, spec.degree)?;
        if spec.sparsity >= basis.len() {
            return Err(Error::Argument(format!(
                "sparsity {} exceeds {} non-constant basis functions",
                spec.sparsity,
                basis.len() - 1
            )));
        }
        for k in sample(rng, basis.len() - 1, spec.sparsity) {
            terms.push((basis.get(k + 1).clone(), coef(rng)));
        }
    }
    if spec.constant != 0.0 {
        terms.push((MonomialIndex::empty(), spec.constant));
    }
    SparsePolynomial::from_terms(spec.n, terms)
}
