use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Resource budget parameters shared by Successive Halving, Hyperband and
/// PGSR-HB.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerConfig {
    /// `R`: resource units for a full evaluation.
    pub max_resource: u64,
    /// `eta`: keep the best `1/eta` after every round.
    pub eta: u64,
    /// `c`: number of passes over all brackets.
    pub cycles: usize,
}

impl SchedulerConfig {
    pub fn new(max_resource: u64, eta: u64, cycles: usize) -> Result<Self> {
        let cfg = Self {
            max_resource,
            eta,
            cycles,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_resource < 1 {
            return Err(Error::Argument("max_resource (R) must be at least 1".into()));
        }
        if self.eta < 2 {
            return Err(Error::Argument("eta must be at least 2".into()));
        }
        if self.cycles < 1 {
            return Err(Error::Argument("cycles must be at least 1".into()));
        }
        Ok(())
    }

    /// `s_max = floor(log_eta R)`, computed in integers.
    pub fn s_max(&self) -> usize {
        let mut s = 0;
        let mut p = self.eta;
        while p <= self.max_resource {
            s += 1;
            p = match p.checked_mul(self.eta) {
                Some(v) => v,
                None => break,
            };
        }
        s
    }

    /// `B = (s_max + 1) R`.
    pub fn budget(&self) -> u64 {
        (self.s_max() as u64 + 1) * self.max_resource
    }

    fn eta_pow(&self, e: usize) -> u64 {
        self.eta.pow(e as u32)
    }

    fn resource(&self, up: usize, down: usize) -> f64 {
        self.max_resource as f64 * self.eta_pow(up) as f64 / self.eta_pow(down) as f64
    }

    /// Hyperband bracket `s`: `n = ceil((B/R) eta^s / (s+1))`, `r = R eta^-s`,
    /// rounds `n_i = floor(n eta^-i)`, `r_i = r eta^i`.
    pub fn bracket(&self, s: usize) -> BracketPlan {
        assert!(s <= self.s_max());
        let numer = (self.s_max() as u64 + 1) * self.eta_pow(s);
        let n = numer.div_ceil(s as u64 + 1) as usize;
        let rounds = (0..=s)
            .map(|i| RoundPlan {
                i,
                n_i: n / self.eta_pow(i) as usize,
                r_i: self.resource(i, s),
            })
            .collect();
        BracketPlan {
            s,
            n,
            r: self.resource(0, s),
            rounds,
        }
    }

    /// Brackets `s = s_max, ..., 0`.
    pub fn brackets(&self) -> Vec<BracketPlan> {
        (0..=self.s_max()).rev().map(|s| self.bracket(s)).collect()
    }

    /// Plain Successive Halving: `n = R`, `r = 1`, rounds `0..=s_max`.
    pub fn successive_halving_plan(&self) -> BracketPlan {
        let s = self.s_max();
        let n = self.max_resource as usize;
        let rounds = (0..=s)
            .map(|i| RoundPlan {
                i,
                n_i: n / self.eta_pow(i) as usize,
                r_i: self.eta_pow(i) as f64,
            })
            .collect();
        BracketPlan { s, n, r: 1.0, rounds }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundPlan {
    pub i: usize,
    pub n_i: usize,
    pub r_i: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketPlan {
    pub s: usize,
    pub n: usize,
    pub r: f64,
    pub rounds: Vec<RoundPlan>,
}

impl BracketPlan {
    /// `sum_i n_i r_i`.
    pub fn total_work(&self) -> f64 {
        self.rounds.iter().map(|r| r.n_i as f64 * r.r_i).sum()
    }
}
